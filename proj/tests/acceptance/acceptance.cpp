// Acceptance suite: one PASS/FAIL line per criterion. Every criterion is run
// twice; the last line compares the two runs' digests.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qcs/bellauth.hpp"
#include "qcs/estimator.hpp"
#include "qcs/io/config.hpp"
#include "qcs/io/timetag_file.hpp"
#include "qcs/linkmodel.hpp"
#include "qcs/netsync.hpp"
#include "qcs/session.hpp"
#include "../support.hpp"

using namespace qcs;
using namespace qcs::testing;

namespace {

struct Digest {
  std::uint64_t h = 14695981039346656037ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ c[i]) * 1099511628211ULL;
  }
  void add(fs_int v) { bytes(&v, sizeof v); }
  void add(Duration d) { add(d.count()); }
  void add(double v) { bytes(&v, sizeof v); }
  void add(std::uint64_t v) { bytes(&v, sizeof v); }
};

struct Verdict {
  bool pass = true;
  std::string detail;
  Digest digest;
  double seconds = 0.0;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct Truth {
  Duration theta;  // B minus A at the window midpoint
  Duration flight;
};

struct Trial {
  SessionStreams streams;
  Truth truth;
};

Trial run_session(const SessionConfig& s, const ClockModel& ma, const ClockModel& mb, std::uint64_t seed) {
  const Duration horizon = s.integration + Duration{kFsPerSecond};
  const ClockState a(ma, derive_seed(seed, {1}), horizon);
  const ClockState b(mb, derive_seed(seed, {2}), horizon);
  Trial t;
  t.streams = acquire_session(s, a, b, TimeStamp{0}, seed);
  const TimeStamp mid{s.integration.count() / 2};
  t.truth.theta = clock_offset(b, mid) - clock_offset(a, mid);
  t.truth.flight = predicted_flight_time(s.link, TimeStamp{0}, Direction::AtoB);
  return t;
}

// 1: ~100 detected pairs per direction against 1 kHz dark counts.
Verdict pair_count() {
  Verdict o;
  SessionSpec spec;
  spec.pair_rate = 1000;
  spec.transmittance = 0.1;
  spec.integration = Duration{kFsPerSecond};
  spec.detector_jitter = Duration::picoseconds(50);
  spec.dark_rate = 1000;
  spec.tagger_resolution = Duration::picoseconds(1);
  spec.range_m = 3e4;
  const SessionConfig s = make_session(spec);
  CorrelationConfig cfg;  // 10 ms window, 1 ns coarse bins
  const int trials = 200;
  int correct = 0;
  double true_pairs = 0;
  for (int i = 0; i < trials; ++i) {
    const Trial t = run_session(s, offset_clock(0), offset_clock(2'345'678'901, 1e-12), 1000 + i);
    true_pairs += static_cast<double>(t.streams.remote_ab.size() + t.streams.remote_ba.size()) / 2.0 - 1000.0;
    bool ok = true;
    const std::pair<const TagStream*, const TagStream*> dirs[] = {{&t.streams.local_a, &t.streams.remote_ab},
                                                                 {&t.streams.local_b, &t.streams.remote_ba}};
    const Duration expected[] = {t.truth.flight + t.truth.theta, t.truth.flight - t.truth.theta};
    for (int d = 0; d < 2; ++d) {
      try {
        const CorrelationResult r = cross_correlate(*dirs[d].first, *dirs[d].second, cfg);
        o.digest.add(r.coarse_peak_center);
        o.digest.add(r.peak_offset);
        if (abs(r.coarse_peak_center - expected[d]) > cfg.coarse_bin) ok = false;
      } catch (const NoPeakError&) {
        ok = false;
      }
    }
    if (ok) ++correct;
  }
  const double rate = static_cast<double>(correct) / trials;
  o.pass = rate >= 0.99;
  o.detail = fmt("correct coarse peak in %.1f%% of 200 trials (~%.0f detected pairs/direction, 1 kHz dark)", 100 * rate,
                 true_pairs / trials);
  return o;
}

double offset_rmse(std::size_t pairs, int trials, Digest& dg) {
  SessionSpec spec;
  spec.pair_rate = static_cast<double>(pairs) * 10.0;
  spec.integration = Duration{kFsPerSecond / 10};
  spec.detector_jitter = Duration::picoseconds(50);
  spec.tagger_resolution = Duration::picoseconds(1);
  spec.pair_sigma = Duration{50};
  const SessionConfig s = make_session(spec);
  CorrelationConfig cfg = tight_correlation(Duration{kFsPerSecond / 5000});
  cfg.fine_bin = Duration::picoseconds(1);
  double ss = 0;
  for (int i = 0; i < trials; ++i) {
    const Trial t = run_session(s, offset_clock(0), offset_clock(-987'654'321), 5000 + i);
    const TwoWayResult r = estimate_two_way(t.streams.local_a, t.streams.remote_ab, t.streams.local_b, t.streams.remote_ba, cfg);
    dg.add(r.clock_offset);
    const double e = static_cast<double>((r.clock_offset - t.truth.theta).count());
    ss += e * e;
  }
  return std::sqrt(ss / trials);
}

// 2: precision with 50 ps detectors.
Verdict precision() {
  Verdict o;
  const double r3 = offset_rmse(1000, 200, o.digest);
  const double r4 = offset_rmse(10000, 200, o.digest);
  o.pass = r3 <= 10000.0 && r4 <= 3000.0;
  o.detail = fmt("RMSE %.2f ps (1e3 pairs, bound 10) and %.2f ps (1e4 pairs, bound 3) over 200 trials", r3 / 1000,
                 r4 / 1000);
  return o;
}

SessionConfig noiseless_session(double range_m, Duration bias = Duration::zero()) {
  SessionSpec spec;
  spec.pair_rate = 1e5;
  spec.range_m = range_m;
  spec.nonreciprocity_bias = bias;
  return make_session(spec);
}

// 3: non-reciprocity shows up as half the bias.
Verdict reciprocity() {
  Verdict o;
  const CorrelationConfig cfg = tight_correlation(Duration{kFsPerSecond / 1000});
  std::string detail;
  for (fs_int b : {fs_int{200}, fs_int{2000}, fs_int{2'000'000}}) {
    const Trial t = run_session(noiseless_session(3e4, Duration{b}), offset_clock(0), offset_clock(55'555'555), 3);
    const TwoWayResult r = estimate_two_way(t.streams.local_a, t.streams.remote_ab, t.streams.local_b, t.streams.remote_ba, cfg);
    const Duration err = r.clock_offset - t.truth.theta;
    o.digest.add(err);
    if (abs(err - Duration{b / 2}) > cfg.fine_bin) o.pass = false;
    detail += (detail.empty() ? "" : ", ") + std::string("b=") + to_string(b) + " fs -> error " + to_string(err.count()) + " fs";
  }
  o.detail = detail + " (expected b/2 +/- 1 fs)";
  return o;
}

// 4: integer-exact recovery with all noise off.
Verdict noiseless() {
  Verdict o;
  const CorrelationConfig cfg = tight_correlation(Duration{kFsPerSecond / 500});
  fs_int worst = 0;
  int cases = 0;
  for (double range : {1.0, 3e4, 299792.458, 4.5e5})
    for (fs_int theta : {fs_int{0}, fs_int{1}, fs_int{-77}, fs_int{123'456'789'012}, fs_int{-999'999'999}}) {
      const Trial t = run_session(noiseless_session(range), offset_clock(1000), offset_clock(1000 + theta), 7 + cases);
      const TwoWayResult r =
          estimate_two_way(t.streams.local_a, t.streams.remote_ab, t.streams.local_b, t.streams.remote_ba, cfg);
      o.digest.add(r.clock_offset);
      o.digest.add(r.flight_time);
      worst = std::max({worst, std::max(r.clock_offset - t.truth.theta, t.truth.theta - r.clock_offset).count(),
                        std::max(r.flight_time - t.truth.flight, t.truth.flight - r.flight_time).count()});
      ++cases;
    }
  o.pass = worst <= 1;
  o.detail = fmt("%.0f cases, worst |theta| or |T_f| error %.0f fs (bound 1 fs)", cases, static_cast<double>(worst));
  return o;
}

// 5: two-pointer histogram against all pairs.
Verdict brute_force() {
  Verdict o;
  std::mt19937_64 rng(55);
  int mismatches = 0;
  for (int inst = 0; inst < 50; ++inst) {
    std::uniform_int_distribution<int> size(1, 200);
    std::uniform_int_distribution<std::int64_t> t(-5'000'000, 5'000'000);
    std::vector<TimeStamp> a, b;
    for (int i = size(rng); i > 0; --i) a.emplace_back(t(rng));
    for (int i = size(rng); i > 0; --i) b.emplace_back(t(rng));
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    TagStream la, rb;
    la.timestamps = a;
    rb.timestamps = b;
    CorrelationConfig cfg;
    cfg.search_window = Duration{2'000'000};
    cfg.coarse_bin = Duration{std::uniform_int_distribution<std::int64_t>(500, 200000)(rng)};
    cfg.fine_bin = Duration{1};
    std::map<std::int64_t, std::uint64_t> brute;
    const fs_int w = cfg.search_window.count(), bw = cfg.coarse_bin.count();
    for (TimeStamp x : a)
      for (TimeStamp y : b) {
        const fs_int d = (y - x).count();
        if (d >= -w && d <= w) ++brute[static_cast<std::int64_t>((d + w) / bw)];
      }
    const SparseHistogram h = coarse_histogram(la, rb, cfg);
    std::map<std::int64_t, std::uint64_t> fast;
    for (const auto& bin : h.bins) {
      fast[bin.index] = bin.count;
      o.digest.add(static_cast<std::uint64_t>(bin.count));
    }
    if (fast != brute) ++mismatches;
  }
  o.pass = mismatches == 0;
  o.detail = fmt("%.0f of 50 random instances differ bin-for-bin", mismatches);
  return o;
}

double tracked_rate(double y, Duration jitter, std::uint64_t seed, Digest& dg) {
  SessionSpec spec;
  spec.pair_rate = 1e4;
  spec.integration = Duration{kFsPerSecond};
  spec.detector_jitter = jitter;
  spec.tagger_resolution = jitter > Duration::zero() ? Duration::picoseconds(1) : Duration{1};
  const SessionConfig s = make_session(spec);
  CorrelationConfig cfg;
  cfg.search_window = Duration{kFsPerSecond / 5000};
  cfg.coarse_bin = Duration{kFsPerSecond / 1'000'000};  // 1 us: the whole-window peak is smeared by y * T
  cfg.fine_bin = Duration{1};
  cfg.block_count = 10;
  const Trial t = run_session(s, offset_clock(0), offset_clock(10'000'000, y), seed);
  const FrequencyFit f =
      frequency_track(t.streams.local_a, t.streams.remote_ab, t.streams.local_b, t.streams.remote_ba, cfg);
  dg.add(f.fractional_frequency);
  return f.fractional_frequency;
}

// 6: block-offset frequency tracking.
Verdict frequency() {
  Verdict o;
  const double quiet = tracked_rate(1e-9, Duration::zero(), 61, o.digest);
  const double noisy = tracked_rate(1e-9, Duration::picoseconds(50), 62, o.digest);
  o.pass = std::fabs(quiet - 1e-9) <= 1e-11 && std::fabs(noisy - 1e-9) <= 5e-11;
  o.detail = fmt("y=1e-9 recovered as %.4e noiseless (tol 1e-11), %.4e with 50 ps jitter, 1e4 pairs, 10 blocks (tol 5e-11)",
                 quiet, noisy);
  return o;
}

// 7: Shapiro delay against an independent evaluation.
Verdict shapiro() {
  Verdict o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> radius(6.4e6, 4.3e7);
  const long double c = kEarth.c;
  const long double scale = 2.0L * kEarth.gm_earth / (c * c * c) * 1e15L;
  long double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const double r1 = radius(rng), r2 = radius(rng);
    std::uniform_real_distribution<double> range(std::fabs(r1 - r2) + 1.0, r1 + r2 - 1.0);
    const double R = range(rng);
    const long double ref = scale * std::log((static_cast<long double>(r1) + r2 + R) / (static_cast<long double>(r1) + r2 - R));
    const long double got = shapiro_delay_fs(r1, r2, R);
    o.digest.add(static_cast<double>(got));
    worst = std::max(worst, std::fabs(got - ref));
  }
  const double re = kEarth.earth_radius, alt = 20200e3;
  const Duration meo = shapiro_delay(re, re + alt, alt);
  o.digest.add(meo);
  o.pass = worst < 1e-3L && meo >= Duration::picoseconds(10) && meo <= Duration::picoseconds(100);
  o.detail = fmt("max deviation %.2e fs over 20 geometries; ground-to-MEO vertical %.2f ps (band 10-100)",
                 static_cast<double>(worst), static_cast<double>(meo.count()) / 1000);
  return o;
}

// 8: CHSH estimates and authentication.
Verdict chsh() {
  Verdict o;
  std::string detail;
  for (double v : {1.0, 0.9, 0.7071, 0.5}) {
    const ChshEstimate e = chsh_value(simulate_coincidences({v}, {}, 10000, derive_seed(8, {static_cast<std::uint64_t>(v * 1e4)})));
    o.digest.add(e.s);
    const double z = (e.s - 2.0 * std::numbers::sqrt2 * v) / e.standard_error;
    if (std::fabs(z) > 4.0) o.pass = false;
    detail += fmt("V=%.4f S=%.4f (%+.2f SE); ", v, e.s, z);
  }
  const AuthPolicy policy;
  int false_auth = 0, trials = 0;
  for (double v : {kInterceptResendVisibility, 0.5})
    for (std::uint64_t i = 0; i < 1000; ++i, ++trials) {
      const ChshEstimate e = chsh_value(simulate_coincidences({v}, {}, 10000, derive_seed(88, {i, static_cast<std::uint64_t>(v * 1e4)})));
      o.digest.add(e.s);
      if (authenticate(e, policy) == AuthDecision::authentic) ++false_auth;
    }
  const double rate = static_cast<double>(false_auth) / trials;
  if (rate >= 0.01) o.pass = false;
  o.detail = detail + fmt("false authentication %.2f%% over %.0f trials with V <= 1/sqrt2", 100 * rate, trials);
  return o;
}

SessionConfig network_session() {
  SessionSpec spec;
  spec.pair_rate = 2e4;
  spec.integration = Duration{kFsPerSecond / 10};
  spec.detector_jitter = Duration::picoseconds(50);
  spec.dark_rate = 1000;
  spec.tagger_resolution = Duration::picoseconds(1);
  return make_session(spec);
}

// 9: strata scaling, failover and leaf isolation.
Verdict strata() {
  Verdict o;
  const SessionConfig s = network_session();
  const CorrelationConfig c = tight_correlation(Duration{kFsPerSecond / 5000});
  const Topology t = chain(3, s, c, {offset_clock(0), offset_clock(3'000'000), offset_clock(-1'500'000), offset_clock(700'000)});
  const Duration horizon{5 * kFsPerSecond};
  double ss[4] = {0, 0, 0, 0};
  std::size_t n = 0;
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const NetworkReport r = run_network(t, horizon, 9000 + trial);
    for (std::size_t k = 0; k + 1 < r.epochs.size(); ++k) {
      for (int level = 1; level <= 3; ++level) {
        const double e = static_cast<double>(r.nodes[static_cast<std::size_t>(level)].error[k].count());
        ss[level] += e * e;
        o.digest.add(r.nodes[static_cast<std::size_t>(level)].error[k]);
      }
      ++n;
    }
  }
  double rms[4];
  bool scaling = true;
  for (int level = 1; level <= 3; ++level) rms[level] = std::sqrt(ss[level] / static_cast<double>(n));
  for (int level = 2; level <= 3; ++level)
    if (std::fabs(rms[level] / rms[1] / std::sqrt(static_cast<double>(level)) - 1.0) > 0.2) scaling = false;

  // Failover: G0 -> S1 -> {G2, G3}, G0 -> S4, standby S4 -> G3.
  Topology tree;
  tree.nodes.push_back(make_node("G0", NodeRole::reference, offset_clock(0), 1));
  tree.nodes.push_back(make_node("S1", NodeRole::satellite, offset_clock(300'000, 1e-12), 2));
  tree.nodes.push_back(make_node("G2", NodeRole::ground, offset_clock(-400'000, -2e-12), 3));
  tree.nodes.push_back(make_node("G3", NodeRole::ground, offset_clock(500'000, 3e-12), 4));
  tree.nodes.push_back(make_node("S4", NodeRole::satellite, offset_clock(-600'000, 1e-12), 5));
  tree.edges.push_back(make_edge("G0", "S1", s, c));
  tree.edges.push_back(make_edge("S1", "G2", s, c));
  tree.edges.push_back(make_edge("S1", "G3", s, c));
  tree.edges.push_back(make_edge("G0", "S4", s, c));
  tree.edges.push_back(make_edge("S4", "G3", s, c, Duration{kFsPerSecond}, true));
  tree.failover_rules["G3"] = {"S4"};
  tree.validate();
  const Duration run_for{12 * kFsPerSecond};
  const TimeStamp fail_at = TimeStamp::from_seconds(5.5L);
  const NetworkReport base = run_network(tree, run_for, 4242);
  const NetworkReport failed = run_network(inject_failure(tree, "S1", fail_at), run_for, 4242);
  std::optional<Duration> resync_after;
  for (const auto& e : failed.events)
    if (e.edge == 4 && e.success && e.scheduled >= fail_at) {
      resync_after = e.scheduled - fail_at;
      break;
    }
  Duration excursion;
  const NodeSeries& g3 = failed.node("G3");
  for (std::size_t k = 0; k < failed.epochs.size(); ++k)
    if (g3.in_service[k]) excursion = std::max(excursion, abs(g3.error[k]));
  const bool failover = resync_after && *resync_after <= Duration{kFsPerSecond} && excursion < Duration::picoseconds(50) &&
                        g3.stratum.back() == 2;
  o.digest.add(excursion);

  const NetworkReport leaf = run_network(inject_failure(tree, "G2", fail_at), run_for, 4242);
  bool isolated = true;
  for (const char* id : {"G0", "S1", "G3", "S4"})
    if (leaf.node(id).error != base.node(id).error) isolated = false;

  o.pass = scaling && failover && isolated;
  o.detail = fmt("RMS by stratum %.3f / %.3f / %.3f ps, ratios to sqrt(k) %.3f",
                 rms[1] / 1000, rms[2] / 1000, rms[3] / 1000, rms[3] / rms[1] / std::sqrt(3.0)) +
             fmt(" and %.3f (tol 20%%); backup resync %.2f s after failure, max excursion %.2f ps", rms[2] / rms[1] / std::sqrt(2.0),
                 resync_after ? static_cast<double>(resync_after->seconds()) : -1.0, static_cast<double>(excursion.count()) / 1000) +
             (isolated ? "; leaf failure isolated" : "; leaf failure changed other series");
  return o;
}

// 10: LEO demo against the baseline bounds.
Verdict baselines() {
  Verdict o;
  const io::ScenarioConfig cfg =
      io::parse_scenario_text(io::read_file(std::string(QCS_SCENARIO_DIR) + "/leo_demo.json"), "leo_demo.json");
  const NetworkReport r = run_network(io::build_topology(cfg), cfg.topology->horizon, cfg.seed());
  const BaselineSummary b = gps_baseline_comparison(r);
  for (const auto& n : r.nodes)
    for (Duration e : n.error) o.digest.add(e);
  std::map<std::string, double> f;
  for (std::size_t i = 0; i < b.bounds.size(); ++i) f[b.bounds[i].name] = b.overall.fraction_within[i];
  o.pass = f["qcs_10ps"] >= 0.9 && f["gps_20ns"] == 1.0 && f["micius_1ns"] == 1.0 && f["micius_avg_0.7ns"] == 1.0;
  o.detail = fmt("within 10 ps: %.1f%%, 0.7 ns: %.1f%%, 1 ns: %.1f%%, 20 ns: %.1f%%", 100 * f["qcs_10ps"],
                 100 * f["micius_avg_0.7ns"], 100 * f["micius_1ns"], 100 * f["gps_20ns"]) +
             fmt(" of %.0f in-service epochs", static_cast<double>(b.overall.samples));
  return o;
}

Verdict timed(const std::function<Verdict()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
    double time_limit_s;  // 0 = none
  };
  const std::vector<Criterion> criteria = {
      {1, "pair-count claim", pair_count, 10.0},
      {2, "precision claim", precision, 60.0},
      {3, "reciprocity algebra", reciprocity, 0},
      {4, "noiseless exactness", noiseless, 0},
      {5, "brute-force equivalence", brute_force, 0},
      {6, "frequency tracking", frequency, 0},
      {7, "Shapiro oracle", shapiro, 0},
      {8, "CHSH", chsh, 0},
      {9, "network strata", strata, 0},
      {10, "baseline bounds", baselines, 0},
  };

  bool all = true, deterministic = true;
  std::string determinism_detail;
  for (const auto& c : criteria) {
    const Verdict first = timed(c.run);
    const Verdict second = timed(c.run);
    bool pass = first.pass;
    std::string detail = first.detail;
    if (c.time_limit_s > 0 && first.seconds >= c.time_limit_s) {
      pass = false;
      detail += fmt(" [too slow: %.1f s, limit %.0f s]", first.seconds, c.time_limit_s);
    }
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", pass ? "PASS" : "FAIL", c.id, c.name, detail.c_str(), first.seconds);
    std::fflush(stdout);
    all = all && pass;
    const bool same = first.digest.h == second.digest.h && first.detail == second.detail;
    if (!same) {
      deterministic = false;
      determinism_detail += " " + std::to_string(c.id);
    }
  }
  std::printf("%s criterion 11 (determinism): %s\n", deterministic ? "PASS" : "FAIL",
              deterministic ? "criteria 1-10 bit-identical across two consecutive runs"
                            : ("runs differ for criteria" + determinism_detail).c_str());
  all = all && deterministic;
  return all ? 0 : 1;
}
