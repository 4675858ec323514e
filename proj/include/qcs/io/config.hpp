#pragma once

// Scenario documents. A scenario is a JSON object with these sections, each
// optional unless the subcommand needs it:
//
//   seeds        {"master": uint}
//   clocks       {name: clock}        sources   {name: source}
//   detectors    {name: detector}     links     {name: link}
//   correlation  estimator settings   bell      CHSH assay
//   topology     network              simulate / relativity   command inputs
//   output       {"dir": path}
//   constants    physical constants; only with "allow_constant_override": true
//
// Durations are integer femtoseconds (keys end in _fs), angles are degrees.
// Unknown keys anywhere are rejected with their JSON-pointer path.

#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcs/bellauth.hpp"
#include "qcs/clock.hpp"
#include "qcs/estimator.hpp"
#include "qcs/io/json.hpp"
#include "qcs/linkmodel.hpp"
#include "qcs/netsync.hpp"
#include "qcs/photonics.hpp"
#include "qcs/session.hpp"

namespace qcs::io {

inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

// Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct BellSection {
  EntanglementModel model;
  ChshSettings settings;
  std::uint64_t pairs_per_setting = 10000;
  std::uint64_t trials = 1;
  AuthPolicy policy;
};

struct SimulateSection {
  std::string link;
  std::string clock_a;
  std::string clock_b;
  TimeStamp start;
};

struct RelativitySection {
  std::string link;
  TimeStamp start;
  TimeStamp end;
  Duration step = Duration{10 * kFsPerSecond};
};

struct NodeSpec {
  std::string id;
  NodeRole role = NodeRole::ground;
  std::string clock;
};

struct EdgeSpec {
  std::string upstream;
  std::string downstream;
  std::string link;
  Duration interval;
  Duration phase;
  bool standby = false;
  bool frequency_tracking = false;
  std::optional<CorrelationConfig> correlation;
};

struct TopologySection {
  Duration horizon;
  Duration sample_interval;
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::map<std::string, std::vector<std::string>> failover;
  std::vector<NodeFailure> failures;
};

struct ScenarioConfig {
  std::optional<std::uint64_t> master_seed;
  PhysicalConstants constants = kEarth;
  std::map<std::string, ClockModel> clocks;
  std::map<std::string, PairSource> sources;
  std::map<std::string, Detector> detectors;
  std::map<std::string, SessionConfig> links;
  CorrelationConfig correlation;
  std::optional<BellSection> bell;
  std::optional<TopologySection> topology;
  std::optional<SimulateSection> simulate;
  std::optional<RelativitySection> relativity;
  std::string output_dir;

  std::uint64_t seed() const {
    if (!master_seed) throw ConfigError("/seeds/master: required key missing (every random process needs a master seed)");
    return *master_seed;
  }

  const SessionConfig& link(const std::string& name, const std::string& path) const {
    const auto it = links.find(name);
    if (it == links.end()) throw ConfigError(path + ": unknown link '" + name + "'");
    return it->second;
  }

  const ClockModel& clock(const std::string& name, const std::string& path) const {
    const auto it = clocks.find(name);
    if (it == clocks.end()) throw ConfigError(path + ": unknown clock '" + name + "'");
    return it->second;
  }
};

namespace detail {

inline ClockModel parse_clock(ObjectReader r) {
  ClockModel m;
  m.initial_offset = r.duration("initial_offset_fs", Duration::zero());
  m.fractional_frequency = r.number("fractional_frequency", 0.0);
  m.frequency_drift = r.number("frequency_drift_per_s", 0.0);
  m.white_phase_sigma = r.duration("white_phase_sigma_fs", Duration::zero());
  m.random_walk_freq_coeff = r.number("random_walk_freq_coeff", 0.0);
  r.finish();
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return m;
}

inline PairSource parse_source(ObjectReader r) {
  PairSource s;
  s.pair_rate = r.number("pair_rate_hz");
  s.pair_correlation_sigma = r.duration("pair_correlation_sigma_fs", Duration{50});
  s.heralding_efficiency_local = r.number("heralding_efficiency_local", 1.0);
  r.finish();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return s;
}

inline Detector parse_detector(ObjectReader r) {
  Detector d;
  d.efficiency = r.number("efficiency", 1.0);
  d.jitter_sigma = r.duration("jitter_sigma_fs", Duration::zero());
  d.dark_rate = r.number("dark_rate_hz", 0.0);
  d.dead_time = r.duration("dead_time_fs", Duration::zero());
  r.finish();
  try {
    d.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return d;
}

inline CorrelationConfig parse_correlation(ObjectReader r) {
  CorrelationConfig c;
  c.search_window = r.duration("search_window_fs", c.search_window);
  c.coarse_bin = r.duration("coarse_bin_fs", c.coarse_bin);
  c.fine_bin = r.duration("fine_bin_fs", c.fine_bin);
  c.refine_span_bins = static_cast<int>(r.integer("refine_span_bins", c.refine_span_bins));
  c.significance_sigma = r.number("significance_sigma", c.significance_sigma);
  c.block_count = static_cast<int>(r.integer("block_count", c.block_count));
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return c;
}

inline GeometryScenario parse_geometry(ObjectReader r, const PhysicalConstants& k) {
  GeometryScenario g;
  g.constants = k;
  const std::string type = r.string("type");
  g.elevation_mask_rad = deg_to_rad(r.number("elevation_mask_deg", 10.0));
  if (type == "static") {
    g.variant = StaticRange{r.number("range_m")};
  } else if (type == "orbit") {
    CircularOrbit o;
    o.altitude_m = r.number("altitude_m");
    o.inclination_rad = deg_to_rad(r.number("inclination_deg", 0.0));
    o.raan_rad = deg_to_rad(r.number("raan_deg", 0.0));
    o.phase0_rad = deg_to_rad(r.number("phase0_deg", 0.0));
    ObjectReader st = r.object("station");
    o.station.lat_rad = deg_to_rad(st.number("lat_deg"));
    o.station.lon_rad = deg_to_rad(st.number("lon_deg"));
    o.station.alt_m = st.number("alt_m", 0.0);
    st.finish();
    g.variant = o;
  } else {
    throw ConfigError(r.sub("type") + ": expected \"static\" or \"orbit\"");
  }
  r.finish();
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return g;
}

template <class T>
const T& lookup(const std::map<std::string, T>& m, const std::string& name, const std::string& path,
                std::string_view what) {
  const auto it = m.find(name);
  if (it == m.end()) throw ConfigError(path + ": unknown " + std::string(what) + " '" + name + "'");
  return it->second;
}

inline SessionConfig parse_link(ObjectReader r, const ScenarioConfig& cfg) {
  SessionConfig s;
  s.link.geometry = parse_geometry(r.object("geometry"), cfg.constants);
  s.link.transmittance = r.number("transmittance", 1.0);
  s.link.channel_jitter_sigma = r.duration("channel_jitter_sigma_fs", Duration::zero());
  s.link.nonreciprocity_bias = r.duration("nonreciprocity_bias_fs", Duration::zero());
  s.link.extra_delay_bias = r.duration("extra_delay_bias_fs", Duration::zero());
  s.link.include_shapiro = r.boolean("include_shapiro", false);
  s.ephemeris_compensation = r.boolean("ephemeris_compensation", true);
  s.integration = r.duration("integration_fs");
  s.source_a = lookup(cfg.sources, r.string("source_a"), r.sub("source_a"), "source");
  s.source_b = lookup(cfg.sources, r.string("source_b"), r.sub("source_b"), "source");
  s.detector_a_local = lookup(cfg.detectors, r.string("detector_a_local"), r.sub("detector_a_local"), "detector");
  s.detector_b_remote = lookup(cfg.detectors, r.string("detector_b_remote"), r.sub("detector_b_remote"), "detector");
  s.detector_b_local = lookup(cfg.detectors, r.string("detector_b_local"), r.sub("detector_b_local"), "detector");
  s.detector_a_remote = lookup(cfg.detectors, r.string("detector_a_remote"), r.sub("detector_a_remote"), "detector");
  if (r.has("tagger")) {
    ObjectReader t = r.object("tagger");
    s.tagger.resolution = t.duration("resolution_fs", s.tagger.resolution);
    s.tagger.range_limit = t.duration("range_limit_fs", Duration::zero());
    t.finish();
  }
  r.finish();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return s;
}

inline PhysicalConstants parse_constants(ObjectReader r) {
  PhysicalConstants k;
  k.c = r.number("c", k.c);
  k.gm_earth = r.number("gm_earth", k.gm_earth);
  k.earth_radius = r.number("earth_radius", k.earth_radius);
  k.earth_rotation_rate = r.number("earth_rotation_rate", k.earth_rotation_rate);
  r.finish();
  if (!(k.c > 0) || !(k.gm_earth > 0) || !(k.earth_radius > 0)) throw ConfigError(r.path() + ": constants must be positive");
  return k;
}

inline BellSection parse_bell(ObjectReader r) {
  BellSection b;
  b.model.visibility = r.number("visibility");
  b.pairs_per_setting = r.unsigned_integer("pairs_per_setting", b.pairs_per_setting);
  b.trials = r.unsigned_integer("trials", 1);
  if (r.has("settings_deg")) {
    ObjectReader s = r.object("settings_deg");
    b.settings.a = deg_to_rad(s.number("a", 0.0));
    b.settings.a_prime = deg_to_rad(s.number("a_prime", 45.0));
    b.settings.b = deg_to_rad(s.number("b", 22.5));
    b.settings.b_prime = deg_to_rad(s.number("b_prime", 67.5));
    s.finish();
  }
  if (r.has("policy")) {
    ObjectReader p = r.object("policy");
    b.policy.s_threshold = p.number("s_threshold", b.policy.s_threshold);
    b.policy.min_pairs_per_setting = p.unsigned_integer("min_pairs_per_setting", b.policy.min_pairs_per_setting);
    b.policy.confidence_sigma = p.number("confidence_sigma", b.policy.confidence_sigma);
    p.finish();
  }
  r.finish();
  try {
    b.model.validate();
    b.settings.validate();
    b.policy.validate();
    if (b.pairs_per_setting == 0 || b.trials == 0) throw ConfigError("pairs_per_setting and trials must be > 0");
  } catch (const ConfigError& e) {
    throw ConfigError(r.path() + ": " + e.what());
  }
  return b;
}

inline NodeRole parse_role(const std::string& s, const std::string& path) {
  if (s == "reference") return NodeRole::reference;
  if (s == "satellite") return NodeRole::satellite;
  if (s == "ground") return NodeRole::ground;
  throw ConfigError(path + ": expected \"reference\", \"satellite\" or \"ground\"");
}

inline TopologySection parse_topology(ObjectReader r) {
  TopologySection t;
  t.horizon = r.duration("horizon_fs");
  t.sample_interval = r.duration("sample_interval_fs", Duration{kFsPerSecond});
  const Json& nodes = r.raw("nodes");
  if (!nodes.is_array()) throw ConfigError(r.sub("nodes") + ": expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    ObjectReader n(nodes[i], r.sub("nodes") + "/" + std::to_string(i));
    NodeSpec spec;
    spec.id = n.string("id");
    spec.role = parse_role(n.string("role"), n.sub("role"));
    spec.clock = n.string("clock");
    n.finish();
    t.nodes.push_back(spec);
  }
  const Json& edges = r.raw("edges");
  if (!edges.is_array()) throw ConfigError(r.sub("edges") + ": expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    ObjectReader e(edges[i], r.sub("edges") + "/" + std::to_string(i));
    EdgeSpec spec;
    spec.upstream = e.string("upstream");
    spec.downstream = e.string("downstream");
    spec.link = e.string("link");
    spec.interval = e.duration("interval_fs");
    spec.phase = e.duration("phase_fs", Duration::zero());
    spec.standby = e.boolean("standby", false);
    spec.frequency_tracking = e.boolean("frequency_tracking", false);
    if (e.has("correlation")) spec.correlation = parse_correlation(e.object("correlation"));
    e.finish();
    t.edges.push_back(spec);
  }
  if (r.has("failover")) {
    const Json& f = r.raw("failover");
    if (!f.is_object()) throw ConfigError(r.sub("failover") + ": expected an object");
    for (auto it = f.begin(); it != f.end(); ++it) {
      if (!it.value().is_array()) throw ConfigError(r.sub("failover") + "/" + it.key() + ": expected an array");
      for (const auto& p : it.value()) {
        if (!p.is_string()) throw ConfigError(r.sub("failover") + "/" + it.key() + ": expected node ids");
        t.failover[it.key()].push_back(p.get<std::string>());
      }
    }
  }
  if (r.has("failures")) {
    const Json& f = r.raw("failures");
    if (!f.is_array()) throw ConfigError(r.sub("failures") + ": expected an array");
    for (std::size_t i = 0; i < f.size(); ++i) {
      ObjectReader fr(f[i], r.sub("failures") + "/" + std::to_string(i));
      NodeFailure nf;
      nf.node = fr.string("node");
      nf.at = TimeStamp{fr.duration("at_fs").count()};
      fr.finish();
      t.failures.push_back(nf);
    }
  }
  r.finish();
  return t;
}

template <class T, class F>
std::map<std::string, T> parse_named(ObjectReader& root, const std::string& key, F&& parse) {
  std::map<std::string, T> out;
  if (!root.has(key)) return out;
  const Json& j = root.raw(key);
  if (!j.is_object()) throw ConfigError(root.sub(key) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) out.emplace(it.key(), parse(ObjectReader(it.value(), root.sub(key) + "/" + it.key())));
  return out;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const Json& doc) {
  ObjectReader root(doc, "");
  ScenarioConfig cfg;

  if (root.has("seeds")) {
    ObjectReader s = root.object("seeds");
    cfg.master_seed = s.unsigned_integer("master");
    s.finish();
  }
  const bool allow_override = root.boolean("allow_constant_override", false);
  if (root.has("constants")) {
    if (!allow_override)
      throw ConfigError("/constants: overriding physical constants requires \"allow_constant_override\": true");
    cfg.constants = detail::parse_constants(root.object("constants"));
  }
  cfg.clocks = detail::parse_named<ClockModel>(root, "clocks", detail::parse_clock);
  cfg.sources = detail::parse_named<PairSource>(root, "sources", detail::parse_source);
  cfg.detectors = detail::parse_named<Detector>(root, "detectors", detail::parse_detector);
  cfg.links = detail::parse_named<SessionConfig>(root, "links",
                                                 [&](ObjectReader r) { return detail::parse_link(std::move(r), cfg); });
  if (root.has("correlation")) cfg.correlation = detail::parse_correlation(root.object("correlation"));
  if (root.has("bell")) cfg.bell = detail::parse_bell(root.object("bell"));
  if (root.has("topology")) cfg.topology = detail::parse_topology(root.object("topology"));
  if (root.has("simulate")) {
    ObjectReader s = root.object("simulate");
    SimulateSection sim;
    sim.link = s.string("link");
    sim.clock_a = s.string("clock_a");
    sim.clock_b = s.string("clock_b");
    sim.start = TimeStamp{s.duration("start_fs", Duration::zero()).count()};
    s.finish();
    cfg.link(sim.link, s.sub("link"));
    cfg.clock(sim.clock_a, s.sub("clock_a"));
    cfg.clock(sim.clock_b, s.sub("clock_b"));
    cfg.simulate = sim;
  }
  if (root.has("relativity")) {
    ObjectReader s = root.object("relativity");
    RelativitySection rel;
    rel.link = s.string("link");
    rel.start = TimeStamp{s.duration("start_fs", Duration::zero()).count()};
    rel.end = TimeStamp{s.duration("end_fs").count()};
    rel.step = s.duration("step_fs", rel.step);
    s.finish();
    cfg.link(rel.link, s.sub("link"));
    if (rel.end < rel.start || rel.step <= Duration::zero())
      throw ConfigError("/relativity: need end_fs >= start_fs and step_fs > 0");
    cfg.relativity = rel;
  }
  if (root.has("output")) {
    ObjectReader o = root.object("output");
    cfg.output_dir = o.string("dir", "");
    o.finish();
  }
  root.finish();
  return cfg;
}

inline ScenarioConfig parse_scenario_text(const std::string& text, const std::string& name = "<config>") {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(name + ": invalid JSON: " + e.what());
  }
  return parse_scenario(doc);
}

// Clock for a named model; its random stream is tied to the master seed and
// the clock's name.
inline ClockState make_clock(const ScenarioConfig& cfg, const std::string& name, Duration horizon) {
  return ClockState(cfg.clock(name, "/clocks/" + name), derive_seed(cfg.seed(), {stream::kClockWalk, fnv1a(name)}),
                    horizon);
}

// Builds the netsync topology from the topology section.
inline Topology build_topology(const ScenarioConfig& cfg) {
  if (!cfg.topology) throw ConfigError("/topology: required section missing");
  const TopologySection& ts = *cfg.topology;
  Topology t;
  t.sample_interval = ts.sample_interval;
  // Clock tables must cover the run plus one acquisition past the end.
  Duration longest{0};
  for (const auto& e : ts.edges) longest = std::max(longest, cfg.link(e.link, "/topology/edges").integration);
  const Duration clock_horizon = ts.horizon + longest + Duration{kFsPerSecond};
  for (std::size_t i = 0; i < ts.nodes.size(); ++i) {
    const NodeSpec& n = ts.nodes[i];
    Node node;
    node.id = n.id;
    node.role = n.role;
    node.clock = ClockState(cfg.clock(n.clock, "/topology/nodes/" + std::to_string(i) + "/clock"),
                            derive_seed(cfg.seed(), {stream::kClockWalk, fnv1a(n.id)}), clock_horizon);
    t.nodes.push_back(std::move(node));
  }
  for (std::size_t i = 0; i < ts.edges.size(); ++i) {
    const EdgeSpec& e = ts.edges[i];
    Edge edge;
    edge.upstream = e.upstream;
    edge.downstream = e.downstream;
    edge.session = cfg.link(e.link, "/topology/edges/" + std::to_string(i) + "/link");
    edge.correlation = e.correlation.value_or(cfg.correlation);
    edge.interval = e.interval;
    edge.phase = e.phase;
    edge.standby = e.standby;
    edge.frequency_tracking = e.frequency_tracking;
    t.edges.push_back(std::move(edge));
  }
  t.failover_rules = ts.failover;
  t.failures = ts.failures;
  try {
    t.validate();
  } catch (const ConfigError& ex) {
    throw ConfigError(std::string("/topology: ") + ex.what());
  }
  return t;
}

}  // namespace qcs::io
