#pragma once

// CHSH assay of a polarization-entangled link. Outcomes follow the singlet
// correlation E(a, b) = -V cos 2(a - b); the link is authenticated when the
// CHSH value clears the classical bound with margin.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "qcs/error.hpp"
#include "qcs/random.hpp"

namespace qcs {

struct EntanglementModel {
  double visibility = 1.0;

  void validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw ConfigError("entanglement visibility must lie in [0, 1]");
  }
  double correlation(double a, double b) const { return -visibility * std::cos(2.0 * (a - b)); }
};

struct ChshSettings {
  double a = 0.0;
  double a_prime = std::numbers::pi / 4;
  double b = std::numbers::pi / 8;
  double b_prime = 3 * std::numbers::pi / 8;

  void validate() const {
    if (!std::isfinite(a) || !std::isfinite(a_prime) || !std::isfinite(b) || !std::isfinite(b_prime))
      throw ConfigError("CHSH angles must be finite");
  }
};

// Setting pairs in CHSH order: (a,b), (a,b'), (a',b), (a',b').
inline constexpr std::size_t kSettingPairs = 4;
// Outcome cells: (+,+), (+,-), (-,+), (-,-).
enum Outcome : std::size_t { kPP = 0, kPM = 1, kMP = 2, kMM = 3 };

using CoincidenceTable = std::array<std::array<std::uint64_t, 4>, kSettingPairs>;

inline std::array<std::pair<double, double>, kSettingPairs> setting_pairs(const ChshSettings& s) {
  return {{{s.a, s.b}, {s.a, s.b_prime}, {s.a_prime, s.b}, {s.a_prime, s.b_prime}}};
}

// Samples pairs_per_setting coincidences per setting pair from
// P(x, y | a, b) = (1 + x y E(a, b)) / 4.
inline CoincidenceTable simulate_coincidences(const EntanglementModel& model, const ChshSettings& settings,
                                              std::uint64_t pairs_per_setting, std::uint64_t seed) {
  model.validate();
  settings.validate();
  if (pairs_per_setting == 0) throw ConfigError("pairs_per_setting must be > 0");
  Rng rng = make_rng(seed, {stream::kBell});
  CoincidenceTable t{};
  const auto pairs = setting_pairs(settings);
  for (std::size_t k = 0; k < kSettingPairs; ++k) {
    const double e = model.correlation(pairs[k].first, pairs[k].second);
    const double p_same = std::clamp(0.5 * (1.0 + e), 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> same(pairs_per_setting, p_same);
    const std::uint64_t n_same = same(rng);
    const std::uint64_t n_diff = pairs_per_setting - n_same;
    std::binomial_distribution<std::uint64_t> half_same(n_same, 0.5);
    std::binomial_distribution<std::uint64_t> half_diff(n_diff, 0.5);
    const std::uint64_t pp = half_same(rng);
    const std::uint64_t pm = half_diff(rng);
    t[k] = {pp, pm, n_diff - pm, n_same - pp};
  }
  return t;
}

struct ChshEstimate {
  double s = 0.0;         // |E(a,b) - E(a,b') + E(a',b) + E(a',b')|
  double s_signed = 0.0;  // the combination before the absolute value
  double standard_error = 0.0;
  std::array<double, kSettingPairs> correlators{};
  CoincidenceTable counts{};

  std::uint64_t min_setting_count() const {
    std::uint64_t m = UINT64_MAX;
    for (const auto& row : counts) m = std::min(m, row[0] + row[1] + row[2] + row[3]);
    return m;
  }
};

inline ChshEstimate chsh_value(const CoincidenceTable& counts) {
  ChshEstimate est;
  est.counts = counts;
  long double var = 0;
  for (std::size_t k = 0; k < kSettingPairs; ++k) {
    const auto& c = counts[k];
    const long double n = static_cast<long double>(c[kPP]) + c[kPM] + c[kMP] + c[kMM];
    if (n == 0) throw ConfigError("chsh_value: setting pair " + std::to_string(k) + " has no coincidences");
    const long double e = (static_cast<long double>(c[kPP]) + c[kMM] - c[kPM] - c[kMP]) / n;
    est.correlators[k] = static_cast<double>(e);
    var += (1.0L - e * e) / n;
  }
  const auto& e = est.correlators;
  est.s_signed = e[0] - e[1] + e[2] + e[3];
  est.s = std::fabs(est.s_signed);
  est.standard_error = static_cast<double>(std::sqrt(var));
  return est;
}

struct AuthPolicy {
  double s_threshold = 2.0;
  std::uint64_t min_pairs_per_setting = 20;
  double confidence_sigma = 3.0;

  void validate() const {
    if (!(s_threshold >= 2.0 && s_threshold <= 2.0 * std::numbers::sqrt2))
      throw ConfigError("auth s_threshold must lie in [2, 2 sqrt 2]");
    if (!(confidence_sigma >= 0.0)) throw ConfigError("auth confidence_sigma must be >= 0");
  }
};

enum class AuthDecision { authentic, rejected, inconclusive };

inline std::string_view to_string(AuthDecision d) {
  switch (d) {
    case AuthDecision::authentic: return "authentic";
    case AuthDecision::rejected: return "rejected";
    case AuthDecision::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

inline AuthDecision authenticate(const ChshEstimate& est, const AuthPolicy& policy) {
  policy.validate();
  if (est.min_setting_count() < policy.min_pairs_per_setting) return AuthDecision::inconclusive;
  if (est.s - policy.confidence_sigma * est.standard_error > policy.s_threshold) return AuthDecision::authentic;
  if (est.s + policy.confidence_sigma * est.standard_error < policy.s_threshold) return AuthDecision::rejected;
  return AuthDecision::inconclusive;
}

// Visibility an intercept-resend adversary can reach at most.
inline constexpr double kInterceptResendVisibility = 1.0 / std::numbers::sqrt2;

}  // namespace qcs
