#pragma once

// Hierarchical time distribution over QCS links. Nodes sit in NTP-style
// strata below one or more reference clocks; each edge periodically runs a
// full two-way acquisition and steps the downstream clock onto the upstream
// one. Orphaned nodes re-parent through an ordered failover list or fall into
// holdover.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "qcs/clock.hpp"
#include "qcs/error.hpp"
#include "qcs/estimator.hpp"
#include "qcs/random.hpp"
#include "qcs/session.hpp"

namespace qcs {

enum class NodeRole { reference, satellite, ground };

inline std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::reference: return "reference";
    case NodeRole::satellite: return "satellite";
    case NodeRole::ground: return "ground";
  }
  return "ground";
}

struct Node {
  std::string id;
  int stratum = -1;  // recomputed by Topology::validate
  ClockState clock;
  NodeRole role = NodeRole::ground;
};

struct Edge {
  std::string upstream;
  std::string downstream;
  SessionConfig session;
  CorrelationConfig correlation;
  Duration interval = Duration{kFsPerSecond};
  Duration phase;                  // first scheduled sync
  bool standby = false;            // inactive until a failover selects it
  bool frequency_tracking = false;  // also steer the downstream rate
};

struct NodeFailure {
  std::string node;
  TimeStamp at;
};

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct Topology {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::map<std::string, std::vector<std::string>> failover_rules;  // ordered backup parents
  std::vector<NodeFailure> failures;
  Duration sample_interval = Duration{kFsPerSecond};

  std::size_t node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return i;
    throw ConfigError("topology: unknown node '" + id + "'");
  }

  std::optional<std::size_t> find_edge(const std::string& up, const std::string& down) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].upstream == up && edges[i].downstream == down) return i;
    return std::nullopt;
  }

  std::size_t reference_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.role == NodeRole::reference; }));
  }

  // Checks structure and recomputes strata from the active edges.
  void validate();
};

namespace detail {

// Shortest hop count from any reference over the given parent map
// (parent[i] = index of node i's active upstream, or npos).
inline std::vector<int> strata_from_parents(const std::vector<Node>& nodes, const std::vector<std::size_t>& parent) {
  constexpr auto npos = static_cast<std::size_t>(-1);
  std::vector<int> s(nodes.size(), kUnreachable);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].role == NodeRole::reference) {
      s[i] = 0;
      continue;
    }
    // Walk up the parent chain; a chain longer than the node count is a cycle.
    std::size_t cur = i;
    int hops = 0;
    while (parent[cur] != npos && hops <= static_cast<int>(nodes.size())) {
      cur = parent[cur];
      ++hops;
    }
    if (nodes[cur].role == NodeRole::reference && hops <= static_cast<int>(nodes.size())) s[i] = hops;
  }
  return s;
}

}  // namespace detail

inline void Topology::validate() {
  if (nodes.empty()) throw ConfigError("topology: no nodes");
  if (reference_count() == 0) throw ConfigError("topology: needs at least one stratum-0 reference node");
  if (!(sample_interval > Duration::zero())) throw ConfigError("topology: sample_interval must be positive");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (nodes[i].id == nodes[j].id) throw ConfigError("topology: duplicate node id '" + nodes[i].id + "'");

  constexpr auto npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(nodes.size(), npos);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    const std::size_t u = node_index(edge.upstream);
    const std::size_t v = node_index(edge.downstream);
    if (u == v) throw ConfigError("topology: edge " + std::to_string(e) + " is a self loop");
    if (!(edge.interval > Duration::zero())) throw ConfigError("topology: edge " + std::to_string(e) + " interval must be positive");
    if (edge.phase < Duration::zero()) throw ConfigError("topology: edge " + std::to_string(e) + " phase must be >= 0");
    edge.session.validate();
    edge.correlation.validate();
    if (edge.standby) continue;
    if (nodes[v].role == NodeRole::reference)
      throw ConfigError("topology: reference node '" + nodes[v].id + "' cannot have a parent");
    if (parent[v] != npos) throw ConfigError("topology: node '" + nodes[v].id + "' has more than one active parent");
    parent[v] = u;
  }
  for (const auto& [child, parents] : failover_rules) {
    node_index(child);
    for (const auto& p : parents)
      if (!find_edge(p, child))
        throw ConfigError("topology: failover parent '" + p + "' of '" + child + "' has no edge to it");
  }
  for (const auto& f : failures) node_index(f.node);

  const auto strata = detail::strata_from_parents(nodes, parent);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (strata[i] == kUnreachable)
      throw ConfigError("topology: node '" + nodes[i].id + "' has no active path to a reference (missing parent or cycle)");
    nodes[i].stratum = strata[i];
  }
}

// Returns a copy with `node` failing at `fail_at`.
inline Topology inject_failure(const Topology& topology, const std::string& node, TimeStamp fail_at) {
  Topology t = topology;
  const std::size_t i = t.node_index(node);
  if (t.nodes[i].role == NodeRole::reference && t.reference_count() < 2)
    throw ConfigError("inject_failure: cannot fail the only reference node '" + node + "'");
  t.failures.push_back({node, fail_at});
  return t;
}

struct SyncEvent {
  std::size_t edge = 0;
  TimeStamp scheduled;
  bool success = false;
  std::string failure;
  Duration clock_offset;  // measured
  Duration flight_time;
  Duration uncertainty;
  double fractional_frequency = 0.0;  // measured, when frequency tracking
  Duration applied_offset;
  double applied_rate = 0.0;
};

struct NodeSeries {
  std::string id;
  NodeRole role = NodeRole::ground;
  std::vector<Duration> error;   // local phase minus the primary reference's, per epoch
  std::vector<int> stratum;      // per epoch
  std::vector<bool> in_service;  // false until the first successful sync
  bool holdover = false;         // at the end of the run
};

struct EdgeStats {
  std::size_t edge = 0;
  std::string upstream;
  std::string downstream;
  std::size_t attempts = 0;
  std::size_t successes = 0;
  double success_rate() const { return attempts ? static_cast<double>(successes) / static_cast<double>(attempts) : 0.0; }
};

struct StratumSummary {
  int stratum = 0;
  std::size_t samples = 0;
  double rms_error_fs = 0.0;
  double max_abs_error_fs = 0.0;
};

struct NetworkReport {
  std::string reference;  // node the errors are measured against
  std::vector<TimeStamp> epochs;
  std::vector<NodeSeries> nodes;
  std::vector<EdgeStats> edges;
  std::vector<SyncEvent> events;
  std::vector<StratumSummary> strata;
  double max_abs_error_fs = 0.0;

  const NodeSeries& node(const std::string& id) const {
    for (const auto& n : nodes)
      if (n.id == id) return n;
    throw ConfigError("report: unknown node '" + id + "'");
  }
};

namespace detail {

enum class EventKind { sync = 0, sample = 1 };

struct ScheduledEvent {
  TimeStamp time;
  EventKind kind;
  std::size_t edge;
  std::uint64_t index;  // per-edge schedule index or epoch index

  friend bool operator>(const ScheduledEvent& a, const ScheduledEvent& b) {
    return std::tie(a.time, a.kind, a.edge, a.index) > std::tie(b.time, b.kind, b.edge, b.index);
  }
};

class NetworkRun {
public:
  NetworkRun(Topology topology, Duration horizon, std::uint64_t seed)
      : topo_(std::move(topology)), horizon_(horizon), seed_(seed) {
    topo_.validate();
    if (horizon_ <= Duration::zero()) throw ConfigError("run_network: horizon must be positive");
    for (const auto& e : topo_.edges)
      if (!e.standby && e.interval > horizon_) throw ConfigError("run_network: horizon shorter than a schedule interval");

    const std::size_t n = topo_.nodes.size();
    clocks_.reserve(n);
    for (const auto& node : topo_.nodes) clocks_.push_back(node.clock);
    parent_edge_.assign(n, npos);
    for (std::size_t e = 0; e < topo_.edges.size(); ++e)
      if (!topo_.edges[e].standby) parent_edge_[topo_.node_index(topo_.edges[e].downstream)] = e;
    active_.resize(topo_.edges.size());
    for (std::size_t e = 0; e < topo_.edges.size(); ++e) active_[e] = !topo_.edges[e].standby;
    fail_at_.assign(n, std::nullopt);
    for (const auto& f : topo_.failures) {
      auto& slot = fail_at_[topo_.node_index(f.node)];
      if (!slot || f.at < *slot) slot = f.at;
    }
    holdover_.assign(n, false);
    synced_.assign(n, false);
    reference_ = 0;
    while (topo_.nodes[reference_].role != NodeRole::reference) ++reference_;

    report_.reference = topo_.nodes[reference_].id;
    for (std::size_t i = 0; i < n; ++i) {
      NodeSeries s;
      s.id = topo_.nodes[i].id;
      s.role = topo_.nodes[i].role;
      report_.nodes.push_back(std::move(s));
      if (topo_.nodes[i].role == NodeRole::reference) synced_[i] = true;
    }
    for (std::size_t e = 0; e < topo_.edges.size(); ++e)
      report_.edges.push_back({e, topo_.edges[e].upstream, topo_.edges[e].downstream, 0, 0});
    strata_ = current_strata();
  }

  NetworkReport run() {
    std::priority_queue<ScheduledEvent, std::vector<ScheduledEvent>, std::greater<>> queue;
    const TimeStamp end = TimeStamp{0} + horizon_;
    for (std::size_t e = 0; e < topo_.edges.size(); ++e) {
      std::uint64_t k = 0;
      for (TimeStamp t = TimeStamp{0} + topo_.edges[e].phase; t < end; t += topo_.edges[e].interval)
        queue.push({t, EventKind::sync, e, k++});
    }
    std::uint64_t epoch = 0;
    for (TimeStamp t{0}; t <= end; t += topo_.sample_interval) queue.push({t, EventKind::sample, 0, epoch++});

    while (!queue.empty()) {
      const ScheduledEvent ev = queue.top();
      queue.pop();
      if (ev.kind == EventKind::sample) sample(ev.time);
      else handle_sync(ev);
    }
    finish();
    return std::move(report_);
  }

private:
  static constexpr auto npos = static_cast<std::size_t>(-1);

  bool failed(std::size_t node, TimeStamp t) const { return fail_at_[node] && *fail_at_[node] <= t; }

  std::vector<std::size_t> parents() const {
    std::vector<std::size_t> p(topo_.nodes.size(), npos);
    for (std::size_t i = 0; i < p.size(); ++i)
      if (parent_edge_[i] != npos) p[i] = topo_.node_index(topo_.edges[parent_edge_[i]].upstream);
    return p;
  }

  std::vector<int> current_strata() const { return strata_from_parents(topo_.nodes, parents()); }

  bool is_descendant(std::size_t candidate, std::size_t ancestor) const {
    const auto p = parents();
    std::size_t cur = candidate;
    for (std::size_t hops = 0; cur != npos && hops <= p.size(); ++hops) {
      if (cur == ancestor) return true;
      cur = p[cur];
    }
    return false;
  }

  void handle_sync(const ScheduledEvent& ev) {
    if (!active_[ev.edge]) return;
    const Edge& edge = topo_.edges[ev.edge];
    const std::size_t u = topo_.node_index(edge.upstream);
    const std::size_t v = topo_.node_index(edge.downstream);

    if (failed(v, ev.time)) {
      record_failure(ev, "downstream node failed");
      return;
    }
    if (failed(u, ev.time)) {
      const auto backup = select_backup(v, ev.time);
      if (!backup) {
        holdover_[v] = true;
        record_failure(ev, "upstream node failed; no live backup, holdover");
        return;
      }
      active_[ev.edge] = false;
      active_[*backup] = true;
      parent_edge_[v] = *backup;
      strata_ = current_strata();
      record_failure(ev, "upstream node failed; re-parented to '" + topo_.edges[*backup].upstream + "'");
      // The orphan resyncs through the backup in this same slot.
      sync(*backup, ev.time, derive_seed(seed_, {stream::kNetwork, ev.edge, ev.index, 1}));
      return;
    }
    sync(ev.edge, ev.time, derive_seed(seed_, {stream::kNetwork, ev.edge, ev.index}));
  }

  std::optional<std::size_t> select_backup(std::size_t child, TimeStamp t) const {
    const auto it = topo_.failover_rules.find(topo_.nodes[child].id);
    if (it == topo_.failover_rules.end()) return std::nullopt;
    for (const auto& pid : it->second) {
      const std::size_t p = topo_.node_index(pid);
      if (failed(p, t) || is_descendant(p, child)) continue;
      if (const auto e = topo_.find_edge(pid, topo_.nodes[child].id)) return e;
    }
    return std::nullopt;
  }

  void record_failure(const ScheduledEvent& ev, std::string why) {
    SyncEvent s;
    s.edge = ev.edge;
    s.scheduled = ev.time;
    s.failure = std::move(why);
    ++report_.edges[ev.edge].attempts;
    report_.events.push_back(std::move(s));
  }

  void sync(std::size_t e, TimeStamp t, std::uint64_t event_seed) {
    const Edge& edge = topo_.edges[e];
    const std::size_t u = topo_.node_index(edge.upstream);
    const std::size_t v = topo_.node_index(edge.downstream);
    SyncEvent s;
    s.edge = e;
    s.scheduled = t;
    ++report_.edges[e].attempts;
    try {
      const SessionStreams st = acquire_session(edge.session, clocks_[u], clocks_[v], t, event_seed, e);
      const TwoWayResult tw = estimate_two_way(st.local_a, st.remote_ab, st.local_b, st.remote_ba, edge.correlation);
      s.clock_offset = tw.clock_offset;
      s.flight_time = tw.flight_time;
      s.uncertainty = tw.offset_uncertainty;

      // The window-averaged offset belongs to the window midpoint.
      const TimeStamp pivot = t + Duration{edge.session.integration.count() / 2};
      Duration fix = tw.clock_offset;
      double rate = 0.0;
      if (edge.frequency_tracking && edge.correlation.block_count >= 2) {
        const FrequencyFit fit = frequency_track(st.local_a, st.remote_ab, st.local_b, st.remote_ba, edge.correlation);
        rate = fit.fractional_frequency;
        s.fractional_frequency = rate;
        const long double a_mid = static_cast<long double>(local_phase(clocks_[u], pivot).count());
        fix = Duration{round_fs(static_cast<long double>(fit.offset_at_epoch.count()) + rate * a_mid)};
      }
      clocks_[v] = apply_correction(clocks_[v], fix, rate, pivot);
      s.applied_offset = fix;
      s.applied_rate = rate;
      s.success = true;
      synced_[v] = true;
      holdover_[v] = false;
      ++report_.edges[e].successes;
    } catch (const EstimationError& ex) {
      s.failure = ex.what();
    } catch (const DomainError& ex) {
      s.failure = ex.what();
    }
    report_.events.push_back(std::move(s));
  }

  void sample(TimeStamp t) {
    report_.epochs.push_back(t);
    const TimeStamp ref = local_phase(clocks_[reference_], t);
    for (std::size_t i = 0; i < clocks_.size(); ++i) {
      auto& s = report_.nodes[i];
      s.error.push_back(local_phase(clocks_[i], t) - ref);
      s.stratum.push_back(strata_[i]);
      s.in_service.push_back(synced_[i]);
    }
  }

  void finish() {
    std::map<int, StratumSummary> by_stratum;
    std::map<int, long double> sq;
    for (std::size_t i = 0; i < report_.nodes.size(); ++i) {
      auto& s = report_.nodes[i];
      s.holdover = holdover_[i];
      for (std::size_t k = 0; k < s.error.size(); ++k) {
        if (!s.in_service[k] || s.stratum[k] == kUnreachable) continue;
        const double err = static_cast<double>(s.error[k].femtoseconds());
        auto& sum = by_stratum[s.stratum[k]];
        sum.stratum = s.stratum[k];
        ++sum.samples;
        sum.max_abs_error_fs = std::max(sum.max_abs_error_fs, std::fabs(err));
        sq[s.stratum[k]] += static_cast<long double>(err) * err;
        report_.max_abs_error_fs = std::max(report_.max_abs_error_fs, std::fabs(err));
      }
    }
    for (auto& [k, sum] : by_stratum) {
      sum.rms_error_fs = static_cast<double>(std::sqrt(sq[k] / static_cast<long double>(sum.samples)));
      report_.strata.push_back(sum);
    }
  }

  Topology topo_;
  Duration horizon_;
  std::uint64_t seed_;
  std::vector<ClockState> clocks_;
  std::vector<std::size_t> parent_edge_;
  std::vector<bool> active_;
  std::vector<std::optional<TimeStamp>> fail_at_;
  std::vector<bool> holdover_;
  std::vector<bool> synced_;
  std::vector<int> strata_;
  std::size_t reference_ = 0;
  NetworkReport report_;
};

}  // namespace detail

// Discrete-event simulation over [0, horizon]. Sync events and report epochs
// are processed in (time, kind, edge) order, syncs before samples at equal
// times. Event randomness is derived from (seed, edge, schedule index).
inline NetworkReport run_network(const Topology& topology, Duration horizon, std::uint64_t seed) {
  return detail::NetworkRun(topology, horizon, seed).run();
}

struct BaselineBound {
  std::string name;
  Duration threshold;
};

// GPS accuracy, Micius sync jitter (upper end and average), and the
// picosecond-class QCS target.
inline std::vector<BaselineBound> default_baseline_bounds() {
  return {{"gps_20ns", Duration::nanoseconds(20)},
          {"micius_1ns", Duration::nanoseconds(1)},
          {"micius_avg_0.7ns", Duration::picoseconds(700)},
          {"qcs_10ps", Duration::picoseconds(10)}};
}

struct BaselineRow {
  std::string node;
  std::size_t samples = 0;
  std::vector<double> fraction_within;  // per bound
};

struct BaselineSummary {
  std::vector<BaselineBound> bounds;
  std::vector<BaselineRow> nodes;
  BaselineRow overall;  // all non-reference nodes pooled
};

// Fraction of in-service epochs whose |error| is within each bound.
inline BaselineSummary gps_baseline_comparison(const NetworkReport& report,
                                               std::vector<BaselineBound> bounds = default_baseline_bounds()) {
  if (report.epochs.empty()) throw ConfigError("gps_baseline_comparison: empty report");
  BaselineSummary out;
  out.bounds = std::move(bounds);
  const std::size_t nb = out.bounds.size();
  std::vector<std::size_t> pooled(nb, 0);
  out.overall.node = "all";
  for (const auto& s : report.nodes) {
    BaselineRow row;
    row.node = s.id;
    std::vector<std::size_t> within(nb, 0);
    for (std::size_t k = 0; k < s.error.size(); ++k) {
      if (!s.in_service[k]) continue;
      ++row.samples;
      for (std::size_t b = 0; b < nb; ++b)
        if (abs(s.error[k]) <= out.bounds[b].threshold) ++within[b];
    }
    for (std::size_t b = 0; b < nb; ++b)
      row.fraction_within.push_back(row.samples ? static_cast<double>(within[b]) / static_cast<double>(row.samples) : 0.0);
    if (s.role != NodeRole::reference) {
      out.overall.samples += row.samples;
      for (std::size_t b = 0; b < nb; ++b) pooled[b] += within[b];
    }
    out.nodes.push_back(std::move(row));
  }
  for (std::size_t b = 0; b < nb; ++b)
    out.overall.fraction_within.push_back(
        out.overall.samples ? static_cast<double>(pooled[b]) / static_cast<double>(out.overall.samples) : 0.0);
  return out;
}

}  // namespace qcs
