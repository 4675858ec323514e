#pragma once

// Imperfect clocks. A ClockModel maps true time t onto a node's local time
//
//   local(t) = theta0 + (1 + y) t + d t^2 / 2 + x_rw(t) + n_wp(t) - corrections
//
// where x_rw is the phase of a random-walk frequency process and n_wp is white
// phase noise evaluated per readout.

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "qcs/error.hpp"
#include "qcs/random.hpp"
#include "qcs/time.hpp"

namespace qcs {

struct ClockModel {
  Duration initial_offset;
  double fractional_frequency = 0.0;  // y
  double frequency_drift = 0.0;       // d, fractional frequency change per second
  Duration white_phase_sigma;
  double random_walk_freq_coeff = 0.0;  // fractional frequency per sqrt(second)

  void validate() const {
    if (!std::isfinite(fractional_frequency) || std::fabs(fractional_frequency) >= 1e-3)
      throw ConfigError("clock fractional_frequency must satisfy |y| < 1e-3");
    if (!std::isfinite(frequency_drift)) throw ConfigError("clock frequency_drift must be finite");
    if (white_phase_sigma < Duration::zero()) throw ConfigError("clock white_phase_sigma must be >= 0");
    if (!std::isfinite(random_walk_freq_coeff) || random_walk_freq_coeff < 0.0)
      throw ConfigError("clock random_walk_freq_coeff must be >= 0");
  }

  bool noiseless() const { return white_phase_sigma == Duration::zero() && random_walk_freq_coeff == 0.0; }
};

inline constexpr Duration kDefaultWalkGrid = Duration{kFsPerSecond / 1000};  // 1 ms
inline const Duration kDefaultClockHorizon = Duration{fs_int{3600} * kFsPerSecond};

class ClockState {
public:
  ClockState() : ClockState(ClockModel{}, 0) {}

  // The random-walk phase is tabulated on `walk_grid` over [0, horizon] at
  // construction; queries past the horizon are rejected.
  ClockState(ClockModel model, std::uint64_t rng_stream, Duration horizon = kDefaultClockHorizon,
             Duration walk_grid = kDefaultWalkGrid)
      : model_(model), rng_stream_(rng_stream), horizon_(horizon), walk_grid_(walk_grid) {
    model_.validate();
    if (horizon <= Duration::zero()) throw ConfigError("clock horizon must be positive");
    if (walk_grid <= Duration::zero()) throw ConfigError("clock walk grid must be positive");
    if (model_.random_walk_freq_coeff > 0.0) build_walk();
  }

  const ClockModel& model() const { return model_; }
  std::uint64_t rng_stream() const { return rng_stream_; }
  Duration horizon() const { return horizon_; }
  Duration accumulated_correction() const { return offset_correction_; }
  double accumulated_rate_correction() const { return rate_correction_; }

  // Random-walk phase deviation in fs (0 before the epoch).
  long double walk_phase(TimeStamp t) const {
    if (!walk_) return 0.0L;
    const fs_int c = t.count();
    if (c <= 0) return 0.0L;
    if (c > horizon_.count()) throw DomainError("true time beyond the clock's scenario horizon");
    const fs_int g = walk_grid_.count();
    const auto k = static_cast<std::size_t>(c / g);
    const long double frac = static_cast<long double>(c % g) / static_cast<long double>(g);
    const auto& w = *walk_;
    if (k + 1 >= w.size()) return w.back();
    return w[k] + frac * (w[k + 1] - w[k]);
  }

  double white_phase_noise_fs(TimeStamp t) const {
    if (model_.white_phase_sigma == Duration::zero()) return 0.0;
    const auto u = static_cast<unsigned __int128>(t.count());
    const double z = keyed_normal(derive_seed(rng_stream_, {stream::kClockWhite}), static_cast<std::uint64_t>(u),
                                  static_cast<std::uint64_t>(u >> 64));
    return z * static_cast<double>(model_.white_phase_sigma.femtoseconds());
  }

  // Rate fix pivots at `at`: local(at) moves by exactly -offset_fix.
  ClockState corrected(Duration offset_fix, double rate_fix, TimeStamp at) const {
    if (!std::isfinite(rate_fix)) throw ConfigError("rate correction must be finite");
    ClockState next = *this;
    next.offset_correction_ = offset_correction_ + offset_fix -
                              Duration{round_fs(static_cast<long double>(rate_fix) * at.count())};
    next.rate_correction_ = rate_correction_ + rate_fix;
    return next;
  }

private:
  void build_walk() {
    const fs_int g = walk_grid_.count();
    const auto n = static_cast<std::size_t>(horizon_.count() / g) + 2;
    auto phase = std::make_shared<std::vector<long double>>(n, 0.0L);
    Rng rng = make_rng(rng_stream_, {stream::kClockWalk});
    std::normal_distribution<double> normal(0.0, 1.0);
    const long double g_s = walk_grid_.seconds();
    const long double step = model_.random_walk_freq_coeff * std::sqrt(g_s);
    const long double g_fs = static_cast<long double>(g);
    long double freq = 0.0L;
    for (std::size_t k = 1; k < n; ++k) {
      const long double next = freq + step * normal(rng);
      (*phase)[k] = (*phase)[k - 1] + 0.5L * (freq + next) * g_fs;
      freq = next;
    }
    walk_ = std::move(phase);
  }

  ClockModel model_;
  std::uint64_t rng_stream_ = 0;
  Duration horizon_;
  Duration walk_grid_;
  Duration offset_correction_;
  double rate_correction_ = 0.0;
  std::shared_ptr<const std::vector<long double>> walk_;
};

namespace detail {

// Continuous part of local - t that is not an integer offset, in fs.
inline long double clock_fraction(const ClockState& s, fs_int t) {
  const long double tf = static_cast<long double>(t);
  const long double ts = tf / static_cast<long double>(kFsPerSecond);
  const long double rate = static_cast<long double>(s.model().fractional_frequency) - s.accumulated_rate_correction();
  return rate * tf + 0.5L * s.model().frequency_drift * ts * ts * static_cast<long double>(kFsPerSecond);
}

inline fs_int clock_base(const ClockState& s, fs_int t) {
  return detail::checked_sub(detail::checked_add(t, s.model().initial_offset.count()), s.accumulated_correction().count());
}

}  // namespace detail

// Local readout of a true instant, including every noise term.
inline TimeStamp local_time(const ClockState& s, TimeStamp true_time) {
  const long double frac = detail::clock_fraction(s, true_time.count()) + s.walk_phase(true_time) +
                           s.white_phase_noise_fs(true_time);
  return TimeStamp{detail::checked_add(detail::clock_base(s, true_time.count()), round_fs(frac))};
}

// Local time without the per-readout white phase term; this is the clock's
// actual phase and what network reports compare against the reference.
inline TimeStamp local_phase(const ClockState& s, TimeStamp true_time) {
  const long double frac = detail::clock_fraction(s, true_time.count()) + s.walk_phase(true_time);
  return TimeStamp{detail::checked_add(detail::clock_base(s, true_time.count()), round_fs(frac))};
}

// Deterministic part only (offset, rate, drift, corrections).
inline TimeStamp local_time_noiseless(const ClockState& s, TimeStamp true_time) {
  return TimeStamp{detail::checked_add(detail::clock_base(s, true_time.count()),
                                       round_fs(detail::clock_fraction(s, true_time.count())))};
}

// Clock error against true time (local phase minus t).
inline Duration clock_offset(const ClockState& s, TimeStamp true_time) { return local_phase(s, true_time) - true_time; }

// Inverts the noiseless mapping. Result is within 1 fs of the exact preimage.
inline TimeStamp true_time_of_local(const ClockState& s, TimeStamp local) {
  const long double rate = static_cast<long double>(s.model().fractional_frequency) - s.accumulated_rate_correction();
  const long double curv =
      0.5L * s.model().frequency_drift / static_cast<long double>(kFsPerSecond);  // per fs
  const fs_int shift = detail::checked_sub(s.model().initial_offset.count(), s.accumulated_correction().count());
  const long double target = static_cast<long double>(detail::checked_sub(local.count(), shift));

  auto slope = [&](long double t) { return 1.0L + rate + 2.0L * curv * t; };
  long double t = target / (1.0L + rate);
  for (int i = 0; i < 8; ++i) {
    const long double f = t + rate * t + curv * t * t - target;
    const long double d = slope(t);
    if (!(d > 0.0L)) throw DomainError("clock mapping is not monotone at this local time");
    const long double step = f / d;
    t -= step;
    if (std::fabs(step) < 0.25L) break;
  }
  if (!(slope(t) > 0.0L)) throw DomainError("clock mapping is not monotone at this local time");

  fs_int ti = round_fs(t);
  for (int i = 0; i < 4; ++i) {
    const fs_int err = detail::checked_sub(local_time_noiseless(s, TimeStamp{ti}).count(), local.count());
    if (err == 0) break;
    ti -= err;
  }
  return TimeStamp{ti};
}

inline ClockState apply_correction(const ClockState& s, Duration offset_fix, double rate_fix,
                                   TimeStamp at = TimeStamp{0}) {
  return s.corrected(offset_fix, rate_fix, at);
}

}  // namespace qcs
