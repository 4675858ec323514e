#pragma once

// Scenario builders shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "qcs/netsync.hpp"
#include "qcs/session.hpp"

namespace qcs::testing {

struct SessionSpec {
  double pair_rate = 1e5;
  Duration pair_sigma = Duration::zero();
  double transmittance = 1.0;
  Duration detector_jitter = Duration::zero();
  double dark_rate = 0.0;
  Duration dead_time = Duration::zero();
  double range_m = 3e4;
  Duration integration = Duration{kFsPerSecond / 100};
  Duration tagger_resolution = Duration{1};
  Duration nonreciprocity_bias = Duration::zero();
};

inline SessionConfig make_session(const SessionSpec& s) {
  SessionConfig c;
  c.source_a.pair_rate = s.pair_rate;
  c.source_a.pair_correlation_sigma = s.pair_sigma;
  c.source_b = c.source_a;
  Detector d;
  d.jitter_sigma = s.detector_jitter;
  d.dark_rate = s.dark_rate;
  d.dead_time = s.dead_time;
  c.detector_a_local = c.detector_b_remote = c.detector_b_local = c.detector_a_remote = d;
  c.tagger.resolution = s.tagger_resolution;
  c.link.geometry.variant = StaticRange{s.range_m};
  c.link.transmittance = s.transmittance;
  c.link.nonreciprocity_bias = s.nonreciprocity_bias;
  c.integration = s.integration;
  return c;
}

inline ClockModel offset_clock(fs_int offset_fs, double y = 0.0) {
  ClockModel m;
  m.initial_offset = Duration{offset_fs};
  m.fractional_frequency = y;
  return m;
}

inline Node make_node(std::string id, NodeRole role, const ClockModel& m, std::uint64_t seed,
                      Duration horizon = Duration{fs_int{600} * kFsPerSecond}) {
  Node n;
  n.id = std::move(id);
  n.role = role;
  n.clock = ClockState(m, seed, horizon);
  return n;
}

inline Edge make_edge(std::string up, std::string down, const SessionConfig& s, const CorrelationConfig& c,
                      Duration interval = Duration{kFsPerSecond}, bool standby = false) {
  Edge e;
  e.upstream = std::move(up);
  e.downstream = std::move(down);
  e.session = s;
  e.correlation = c;
  e.interval = interval;
  e.standby = standby;
  return e;
}

// Reference "N0" followed by `levels` nodes N1..Nk in a line.
inline Topology chain(int levels, const SessionConfig& s, const CorrelationConfig& c, const std::vector<ClockModel>& clocks,
                      Duration interval = Duration{kFsPerSecond}) {
  Topology t;
  for (int i = 0; i <= levels; ++i)
    t.nodes.push_back(make_node("N" + std::to_string(i), i == 0 ? NodeRole::reference : NodeRole::ground,
                                clocks[static_cast<std::size_t>(i) % clocks.size()], 100 + static_cast<std::uint64_t>(i)));
  for (int i = 1; i <= levels; ++i)
    t.edges.push_back(make_edge("N" + std::to_string(i - 1), "N" + std::to_string(i), s, c, interval));
  t.validate();
  return t;
}

inline CorrelationConfig tight_correlation(Duration window = Duration{kFsPerSecond / 5000}) {
  CorrelationConfig c;
  c.search_window = window;
  c.coarse_bin = Duration::nanoseconds(1);
  c.fine_bin = Duration{1};
  return c;
}

}  // namespace qcs::testing
