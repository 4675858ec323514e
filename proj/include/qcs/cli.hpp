#pragma once

// Subcommands behind the `qcs` tool: simulate, estimate, relativity, bell,
// net. Exit codes: 0 ok, 2 configuration, 3 estimation failure, 4 I/O.

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qcs/bellauth.hpp"
#include "qcs/error.hpp"
#include "qcs/estimator.hpp"
#include "qcs/io/config.hpp"
#include "qcs/io/json.hpp"
#include "qcs/io/report.hpp"
#include "qcs/io/timetag_file.hpp"
#include "qcs/linkmodel.hpp"
#include "qcs/netsync.hpp"
#include "qcs/session.hpp"

namespace qcs::cli {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfig = 2, kEstimation = 3, kIo = 4 };

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
};

inline constexpr const char* kDefaultOutDir = "qcs_out";

namespace detail {

inline io::ScenarioConfig load_config(const CommonOptions& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  const std::string text = io::read_file(o.config);
  io::ScenarioConfig cfg = io::parse_scenario_text(text, o.config);
  if (o.seed) cfg.master_seed = *o.seed;
  return cfg;
}

inline std::filesystem::path out_dir(const CommonOptions& o, const io::ScenarioConfig* cfg) {
  if (!o.out.empty()) return o.out;
  if (cfg && !cfg->output_dir.empty()) return cfg->output_dir;
  return kDefaultOutDir;
}

inline std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

// Estimate JSON as produced by both `simulate` and `estimate`.
inline io::Json estimate_json(const TagStream& la, const TagStream& rab, const TagStream& lb, const TagStream& rba,
                              const CorrelationConfig& cfg, TwoWayResult* keep = nullptr) {
  const TwoWayResult tw = estimate_two_way(la, rab, lb, rba, cfg);
  if (keep) *keep = tw;
  io::Json j = io::two_way_json(tw);
  if (cfg.block_count >= 2) j["frequency"] = io::frequency_json(frequency_track(la, rab, lb, rba, cfg));
  return j;
}

}  // namespace detail

inline int cmd_simulate(const CommonOptions& o, std::ostream& out) {
  const io::ScenarioConfig cfg = detail::load_config(o);
  if (!cfg.simulate) throw ConfigError("/simulate: required section missing");
  const auto& sim = *cfg.simulate;
  const SessionConfig& session = cfg.link(sim.link, "/simulate/link");
  const std::uint64_t seed = cfg.seed();
  const std::uint64_t scenario_hash = io::fnv1a(io::read_file(o.config)) ^ seed;

  const Duration horizon = (sim.start + session.integration + Duration{kFsPerSecond}).since_epoch();
  const ClockState clock_a = io::make_clock(cfg, sim.clock_a, horizon);
  const ClockState clock_b = io::make_clock(cfg, sim.clock_b, horizon);
  const SessionStreams st = acquire_session(session, clock_a, clock_b, sim.start, seed, scenario_hash);

  const auto dir = detail::out_dir(o, &cfg);
  io::save_timetag(dir / "local_a.tt", st.local_a);
  io::save_timetag(dir / "remote_ab.tt", st.remote_ab);
  io::save_timetag(dir / "local_b.tt", st.local_b);
  io::save_timetag(dir / "remote_ba.tt", st.remote_ba);

  // Truth: B minus A phase at the window midpoint.
  const TimeStamp mid = sim.start + Duration{session.integration.count() / 2};
  const Duration true_offset = clock_offset(clock_b, mid) - clock_offset(clock_a, mid);

  TwoWayResult tw;
  const io::Json result =
      detail::estimate_json(st.local_a, st.remote_ab, st.local_b, st.remote_ba, cfg.correlation, &tw);
  io::write_file_atomic(dir / "two_way.json", detail::dump(result));

  const Duration estimated = tw.clock_offset;
  io::Json summary;
  summary["true_clock_offset_fs"] = io::to_json(true_offset);
  summary["estimated_clock_offset_fs"] = result["clock_offset_fs"];
  summary["offset_error_fs"] = io::to_json(estimated - true_offset);
  summary["flight_time_fs"] = result["flight_time_fs"];
  summary["offset_uncertainty_fs"] = result["offset_uncertainty_fs"];
  summary["counts"] = {{"local_a", st.local_a.size()},
                       {"remote_ab", st.remote_ab.size()},
                       {"local_b", st.local_b.size()},
                       {"remote_ba", st.remote_ba.size()}};
  io::write_file_atomic(dir / "simulate_summary.json", detail::dump(summary));

  out << "theta_fs=" << to_string(tw.clock_offset.count()) << " flight_time_fs=" << to_string(tw.flight_time.count())
      << " uncertainty_fs=" << to_string(tw.offset_uncertainty.count()) << '\n';
  return kOk;
}

struct EstimateOptions {
  std::string local_a, remote_ab, local_b, remote_ba;
};

inline int cmd_estimate(const CommonOptions& o, const EstimateOptions& e, std::ostream& out) {
  CorrelationConfig corr;
  if (!o.config.empty()) corr = detail::load_config(o).correlation;
  const TagStream la = io::load_timetag(e.local_a);
  const TagStream rab = io::load_timetag(e.remote_ab);
  const TagStream lb = io::load_timetag(e.local_b);
  const TagStream rba = io::load_timetag(e.remote_ba);
  const std::string text = detail::dump(detail::estimate_json(la, rab, lb, rba, corr));
  if (!o.out.empty()) io::write_file_atomic(std::filesystem::path(o.out) / "two_way.json", text);
  out << text;
  return kOk;
}

inline int cmd_relativity(const CommonOptions& o, std::ostream& out) {
  const io::ScenarioConfig cfg = detail::load_config(o);
  if (!cfg.relativity) throw ConfigError("/relativity: required section missing");
  const auto& rel = *cfg.relativity;
  const SessionConfig& session = cfg.link(rel.link, "/relativity/link");
  const LinkModel& link = session.link;
  const GeometryScenario& g = link.geometry;

  io::Json j;
  j["link"] = rel.link;
  j["geometry"] = g.is_orbit() ? "orbit" : "static";
  if (const auto* orbit = std::get_if<CircularOrbit>(&g.variant)) {
    j["orbital_period_s"] = orbital_period(*orbit, g.constants);
    const double y = relativistic_rate_offset(g);
    j["rate_offset"] = y;
    j["rate_offset_us_per_day"] = y * 86400.0 * 1e6;
  } else {
    j["orbital_period_s"] = nullptr;
    j["rate_offset"] = nullptr;
    j["rate_offset_us_per_day"] = nullptr;
  }

  std::ostringstream csv;
  csv << "t_s,visible,elevation_deg,slant_range_m,flight_time_ab_fs,flight_time_ba_fs,shapiro_fs\n";
  io::Json samples = io::Json::array();
  for (TimeStamp t = rel.start; t <= rel.end; t += rel.step) {
    const RangeSample r = slant_range(g, t);
    io::Json s;
    const double ts = static_cast<double>(t.seconds());
    s["t_s"] = ts;
    s["visible"] = r.visible;
    s["elevation_deg"] = r.elevation_rad * 180.0 / std::numbers::pi;
    s["slant_range_m"] = r.range_m;
    csv << io::format_double(ts) << ',' << (r.visible ? 1 : 0) << ',' << io::format_double(r.elevation_rad * 180.0 / std::numbers::pi)
        << ',' << io::format_double(r.range_m);
    if (r.visible) {
      const Duration ab = time_of_flight(link, t, Direction::AtoB);
      const Duration ba = time_of_flight(link, t, Direction::BtoA);
      const FlightTime ft = geometric_flight_time(g, t, Direction::AtoB);
      s["flight_time_ab_fs"] = io::to_json(ab);
      s["flight_time_ba_fs"] = io::to_json(ba);
      s["shapiro_fs"] = static_cast<double>(ft.shapiro_fs);
      csv << ',' << to_string(ab.count()) << ',' << to_string(ba.count()) << ','
          << io::format_double(static_cast<double>(ft.shapiro_fs));
    } else {
      csv << ",,,";
    }
    csv << '\n';
    samples.push_back(std::move(s));
  }
  j["samples"] = std::move(samples);

  const auto windows = visibility_windows(g, rel.start, rel.end, rel.step);
  io::Json wj = io::Json::array();
  for (const auto& w : windows)
    wj.push_back({{"start_s", w.start_s}, {"end_s", w.end_s}, {"max_elevation_deg", w.max_elevation_rad * 180.0 / std::numbers::pi}});
  j["visibility_windows"] = std::move(wj);

  const auto dir = detail::out_dir(o, &cfg);
  io::write_file_atomic(dir / "relativity.json", detail::dump(j));
  io::write_file_atomic(dir / "relativity.csv", csv.str());
  io::write_file_atomic(dir / "visibility.csv", io::visibility_csv(windows));
  out << (o.format == "csv" ? csv.str() : detail::dump(j));
  return kOk;
}

inline int cmd_bell(const CommonOptions& o, std::ostream& out) {
  const io::ScenarioConfig cfg = detail::load_config(o);
  if (!cfg.bell) throw ConfigError("/bell: required section missing");
  const auto& b = *cfg.bell;
  const std::uint64_t seed = cfg.seed();

  io::Json j;
  j["visibility"] = b.model.visibility;
  j["pairs_per_setting"] = b.pairs_per_setting;
  j["analytic_S"] = 2.0 * std::numbers::sqrt2 * b.model.visibility;
  std::size_t authentic = 0, rejected = 0, inconclusive = 0;
  for (std::uint64_t trial = 0; trial < b.trials; ++trial) {
    const ChshEstimate est = chsh_value(simulate_coincidences(b.model, b.settings, b.pairs_per_setting, derive_seed(seed, {stream::kBell, trial})));
    const AuthDecision d = authenticate(est, b.policy);
    if (trial == 0) {
      j["estimate"] = io::chsh_json(est);
      j["decision"] = std::string(to_string(d));
    }
    switch (d) {
      case AuthDecision::authentic: ++authentic; break;
      case AuthDecision::rejected: ++rejected; break;
      case AuthDecision::inconclusive: ++inconclusive; break;
    }
  }
  j["trials"] = b.trials;
  j["decisions"] = {{"authentic", authentic}, {"rejected", rejected}, {"inconclusive", inconclusive}};

  const std::string text = detail::dump(j);
  io::write_file_atomic(detail::out_dir(o, &cfg) / "bell.json", text);
  out << text;
  return kOk;
}

inline int cmd_net(const CommonOptions& o, std::ostream& out) {
  const io::ScenarioConfig cfg = detail::load_config(o);
  const Topology topo = io::build_topology(cfg);
  const NetworkReport report = run_network(topo, cfg.topology->horizon, cfg.seed());
  const BaselineSummary baseline = gps_baseline_comparison(report);

  io::Json j = io::network_json(report);
  j["baseline"] = io::baseline_json(baseline);
  const auto dir = detail::out_dir(o, &cfg);
  io::write_file_atomic(dir / "network_report.json", detail::dump(j));
  for (const auto& n : report.nodes) io::write_file_atomic(dir / ("errors_" + n.id + ".csv"), io::node_error_csv(report, n));

  if (o.format == "csv") {
    std::ostringstream csv;
    csv << "epoch_s";
    for (const auto& n : report.nodes) csv << ',' << n.id << "_fs";
    csv << '\n';
    for (std::size_t k = 0; k < report.epochs.size(); ++k) {
      csv << io::format_double(static_cast<double>(report.epochs[k].seconds()));
      for (const auto& n : report.nodes) csv << ',' << to_string(n.error[k].count());
      csv << '\n';
    }
    out << csv.str();
  } else {
    io::Json s;
    s["reference"] = report.reference;
    s["strata"] = j["strata"];
    s["edges"] = j["edges"];
    s["max_abs_error_fs"] = report.max_abs_error_fs;
    s["baseline"] = j["baseline"];
    out << detail::dump(s);
  }
  return kOk;
}

// Maps library exceptions onto exit codes.
template <class F>
int guarded(F&& f, std::ostream& err) {
  try {
    return f();
  } catch (const NoPeakError& e) {
    err << "error: " << e.what() << '\n';
    return kEstimation;
  } catch (const EstimationError& e) {
    err << "error: " << e.what() << '\n';
    return kEstimation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const OverflowError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Entangled-photon clock synchronization simulator and estimator", "qcs"};
  app.require_subcommand(1);
  CommonOptions common;
  EstimateOptions est;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", common.config, "scenario JSON");
    if (config_required) c->required();
    sub->add_option("--seed", common.seed, "override seeds.master");
    sub->add_option("--out", common.out, "artifact directory");
    sub->add_option("--format", common.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));
  };

  auto* simulate = app.add_subcommand("simulate", "run one two-node session end to end");
  add_common(simulate, true);
  auto* estimate = app.add_subcommand("estimate", "two-way estimate from four timetag files");
  add_common(estimate, false);
  estimate->add_option("--local-a", est.local_a, "A's own detections (A frame)")->required();
  estimate->add_option("--remote-ab", est.remote_ab, "B's detections of A's photons (B frame)")->required();
  estimate->add_option("--local-b", est.local_b, "B's own detections (B frame)")->required();
  estimate->add_option("--remote-ba", est.remote_ba, "A's detections of B's photons (A frame)")->required();
  auto* relativity = app.add_subcommand("relativity", "link geometry, Shapiro delay and rate offset over a pass");
  add_common(relativity, true);
  auto* bell = app.add_subcommand("bell", "CHSH assay and authentication decision");
  add_common(bell, true);
  auto* net = app.add_subcommand("net", "hierarchical network simulation");
  add_common(net, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kConfig;
  }

  return guarded(
      [&]() -> int {
        if (*simulate) return cmd_simulate(common, out);
        if (*estimate) return cmd_estimate(common, est, out);
        if (*relativity) return cmd_relativity(common, out);
        if (*bell) return cmd_bell(common, out);
        return cmd_net(common, out);
      },
      err);
}

}  // namespace qcs::cli
