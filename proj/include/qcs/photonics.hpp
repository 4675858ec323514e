#pragma once

// SPDC pair generation and the detector / time-tagger chain that turns photon
// arrivals into timestamp streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qcs/clock.hpp"
#include "qcs/error.hpp"
#include "qcs/random.hpp"
#include "qcs/time.hpp"

namespace qcs {

inline constexpr double kMaxExpectedEvents = 1e9;

struct PairSource {
  double pair_rate = 1e6;                         // pairs per second
  Duration pair_correlation_sigma = Duration{50};  // std of the pair time difference
  double heralding_efficiency_local = 1.0;

  void validate() const {
    if (!(pair_rate > 0.0) || !std::isfinite(pair_rate)) throw ConfigError("source pair_rate must be > 0");
    if (pair_correlation_sigma < Duration::zero() || pair_correlation_sigma > Duration{1'000'000})
      throw ConfigError("source pair_correlation_sigma must lie in [0, 1e6] fs");
    if (!(heralding_efficiency_local >= 0.0 && heralding_efficiency_local <= 1.0))
      throw ConfigError("source heralding_efficiency_local must lie in [0, 1]");
  }
};

struct Detector {
  double efficiency = 1.0;
  Duration jitter_sigma;
  double dark_rate = 0.0;  // counts per second
  Duration dead_time;

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw ConfigError("detector efficiency must lie in [0, 1]");
    if (jitter_sigma < Duration::zero()) throw ConfigError("detector jitter_sigma must be >= 0");
    if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate)) throw ConfigError("detector dark_rate must be >= 0");
    if (dead_time < Duration::zero()) throw ConfigError("detector dead_time must be >= 0");
  }
};

struct TimeTagger {
  Duration resolution = Duration{kFsPerPicosecond};
  Duration range_limit;  // maximum |timestamp|; zero means unlimited

  void validate() const {
    if (resolution < Duration{1}) throw ConfigError("tagger resolution must be >= 1 fs");
    if (range_limit < Duration::zero()) throw ConfigError("tagger range_limit must be >= 0");
  }
};

// Detection timestamps of one channel, in the local frame of one clock.
struct TagStream {
  std::string channel_id;
  std::vector<TimeStamp> timestamps;
  std::string frame;
  std::uint64_t scenario_hash = 0;
  Duration resolution = Duration{1};

  std::size_t size() const { return timestamps.size(); }
  bool empty() const { return timestamps.empty(); }
};

// Homogeneous Poisson process of pair births on [start, start + horizon).
inline std::vector<TimeStamp> generate_pair_births(const PairSource& source, Duration horizon, std::uint64_t seed,
                                                   TimeStamp start = TimeStamp{0}) {
  source.validate();
  if (horizon < Duration::zero()) throw ConfigError("pair generation horizon must be >= 0");
  std::vector<TimeStamp> births;
  if (horizon == Duration::zero()) return births;
  const long double expected = static_cast<long double>(source.pair_rate) * horizon.seconds();
  if (expected > kMaxExpectedEvents) throw ConfigError("expected pair count exceeds the 1e9 resource guard");

  Rng rng = make_rng(seed, {stream::kPairBirths});
  std::exponential_distribution<double> gap(1.0);
  const long double mean_gap_fs = static_cast<long double>(kFsPerSecond) / source.pair_rate;
  const TimeStamp end = start + horizon;
  births.reserve(static_cast<std::size_t>(expected + 6.0L * std::sqrt(expected) + 16.0L));
  TimeStamp t = start;
  for (;;) {
    t += Duration{round_fs(gap(rng) * mean_gap_fs)};
    if (t >= end) break;
    births.push_back(t);
  }
  return births;
}

struct PhotonPair {
  TimeStamp local_photon;
  TimeStamp remote_photon;
};

// Each arm gets an independent N(0, sigma/sqrt 2) offset, so the pair
// difference has the quoted correlation width.
inline PhotonPair split_pair(TimeStamp birth, const PairSource& source, Rng& rng) {
  if (source.pair_correlation_sigma == Duration::zero()) return {birth, birth};
  const double arm_sigma = static_cast<double>(source.pair_correlation_sigma.femtoseconds()) / std::numbers::sqrt2;
  std::normal_distribution<double> n(0.0, arm_sigma);
  const Duration dl{round_fs(n(rng))};
  const Duration dr{round_fs(n(rng))};
  return {birth + dl, birth + dr};
}

inline PhotonPair split_pair(TimeStamp birth, const PairSource& source, std::uint64_t seed) {
  Rng rng = make_rng(seed, {stream::kSplit});
  return split_pair(birth, source, rng);
}

struct PairArms {
  std::vector<TimeStamp> local;   // sorted, after local heralding loss
  std::vector<TimeStamp> remote;  // sorted
};

// Splits every birth and applies the local-arm heralding efficiency.
inline PairArms split_pairs(const std::vector<TimeStamp>& births, const PairSource& source, std::uint64_t seed) {
  source.validate();
  Rng rng = make_rng(seed, {stream::kSplit});
  std::bernoulli_distribution herald(source.heralding_efficiency_local);
  PairArms arms;
  arms.local.reserve(births.size());
  arms.remote.reserve(births.size());
  for (TimeStamp b : births) {
    const PhotonPair p = split_pair(b, source, rng);
    if (herald(rng)) arms.local.push_back(p.local_photon);
    arms.remote.push_back(p.remote_photon);
  }
  std::sort(arms.local.begin(), arms.local.end());
  std::sort(arms.remote.begin(), arms.remote.end());
  return arms;
}

// Drops every event that falls within dead_time of the last accepted one.
inline std::vector<TimeStamp> dead_time_filter(const std::vector<TimeStamp>& sorted, Duration dead_time) {
  std::vector<TimeStamp> out;
  out.reserve(sorted.size());
  for (TimeStamp t : sorted) {
    if (out.empty() || t - out.back() >= dead_time) out.push_back(t);
  }
  return out;
}

// Detector plus tagger. Arrivals are true times; the resulting stream is in the
// clock's local frame, floor-quantized to the tagger resolution, strictly
// sorted. Events that land in the same tagger bin collapse into one.
inline TagStream detect(const std::vector<TimeStamp>& arrivals_true, const Detector& detector, const ClockState& clock,
                        const TimeTagger& tagger, Duration horizon, std::uint64_t seed,
                        TimeStamp start = TimeStamp{0}, std::string channel_id = {}, std::string frame = {}) {
  detector.validate();
  tagger.validate();
  if (!std::is_sorted(arrivals_true.begin(), arrivals_true.end()))
    throw ConfigError("detect: photon arrivals must be sorted");
  if (horizon < Duration::zero()) throw ConfigError("detect: horizon must be >= 0");

  Rng rng = make_rng(seed, {stream::kDetect});
  std::bernoulli_distribution survive(detector.efficiency);
  const double jitter = static_cast<double>(detector.jitter_sigma.femtoseconds());
  std::normal_distribution<double> jitter_dist(0.0, jitter > 0.0 ? jitter : 1.0);

  std::vector<TimeStamp> events;
  events.reserve(arrivals_true.size());
  for (TimeStamp a : arrivals_true) {
    if (!survive(rng)) continue;
    events.push_back(jitter > 0.0 ? a + Duration{round_fs(jitter_dist(rng))} : a);
  }

  const long double expected_dark = static_cast<long double>(detector.dark_rate) * horizon.seconds();
  if (expected_dark > kMaxExpectedEvents) throw ConfigError("expected dark count exceeds the 1e9 resource guard");
  if (expected_dark > 0.0L && horizon > Duration::zero()) {
    std::poisson_distribution<std::int64_t> count(static_cast<double>(expected_dark));
    const std::int64_t n = count(rng);
    std::uniform_int_distribution<std::uint64_t> where(0, static_cast<std::uint64_t>(horizon.count() - 1));
    for (std::int64_t i = 0; i < n; ++i) events.push_back(start + Duration{static_cast<fs_int>(where(rng))});
  }

  std::sort(events.begin(), events.end());
  events = dead_time_filter(events, detector.dead_time);

  TagStream out;
  out.channel_id = std::move(channel_id);
  out.frame = std::move(frame);
  out.resolution = tagger.resolution;
  out.timestamps.reserve(events.size());
  const fs_int res = tagger.resolution.count();
  const fs_int limit = tagger.range_limit.count();
  for (TimeStamp e : events) {
    const fs_int local = local_time(clock, e).count();
    const fs_int q = floor_div(local, res) * res;
    if (limit > 0 && (q > limit || q < -limit)) continue;
    out.timestamps.emplace_back(q);
  }
  std::sort(out.timestamps.begin(), out.timestamps.end());
  out.timestamps.erase(std::unique(out.timestamps.begin(), out.timestamps.end()), out.timestamps.end());
  return out;
}

}  // namespace qcs
