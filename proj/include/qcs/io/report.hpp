#pragma once

// JSON and CSV renderings of library results. Field order is fixed, so output
// is byte-identical for identical inputs.

#include <cstdio>
#include <sstream>
#include <string>

#include "qcs/bellauth.hpp"
#include "qcs/estimator.hpp"
#include "qcs/io/json.hpp"
#include "qcs/linkmodel.hpp"
#include "qcs/netsync.hpp"

namespace qcs::io {

inline Json correlation_json(const CorrelationResult& r) {
  Json j;
  j["peak_offset_fs"] = to_json(r.peak_offset);
  j["coarse_peak_center_fs"] = to_json(r.coarse_peak_center);
  j["peak_counts"] = r.peak_counts;
  j["background_mean"] = r.background_mean;
  j["background_sigma"] = r.background_sigma;
  j["significance"] = r.significance;
  j["peak_width_fs"] = r.peak_width_fs;
  j["window_counts"] = r.window_counts;
  j["uncertainty_fs"] = to_json(estimate_uncertainty(r));
  Json h;
  h["bin_width_fs"] = to_json(r.histogram.bin_width);
  h["span_start_fs"] = to_json(r.histogram.span_start);
  h["counts"] = r.histogram.counts;
  j["fine_histogram"] = std::move(h);
  return j;
}

inline Json two_way_json(const TwoWayResult& r) {
  Json j;
  j["clock_offset_fs"] = to_json(r.clock_offset);
  j["flight_time_fs"] = to_json(r.flight_time);
  j["offset_uncertainty_fs"] = to_json(r.offset_uncertainty);
  j["significance_ab"] = r.ab.significance;
  j["significance_ba"] = r.ba.significance;
  j["ab"] = correlation_json(r.ab);
  j["ba"] = correlation_json(r.ba);
  return j;
}

inline Json frequency_json(const FrequencyFit& f) {
  Json j;
  j["fractional_frequency"] = f.fractional_frequency;
  j["slope_standard_error"] = f.slope_standard_error;
  j["offset_at_epoch_fs"] = to_json(f.offset_at_epoch);
  j["residual_rms_fs"] = f.residual_rms_fs;
  Json blocks = Json::array();
  for (const auto& b : f.block_offsets) {
    Json row;
    row["midpoint_fs"] = to_json(b.midpoint);
    row["valid"] = b.valid;
    if (b.valid) {
      row["clock_offset_fs"] = to_json(b.clock_offset);
      row["uncertainty_fs"] = to_json(b.uncertainty);
    } else {
      row["failure"] = b.failure;
    }
    blocks.push_back(std::move(row));
  }
  j["blocks"] = std::move(blocks);
  j["warnings"] = f.warnings;
  return j;
}

inline Json chsh_json(const ChshEstimate& e) {
  Json j;
  j["S"] = e.s;
  j["S_signed"] = e.s_signed;
  j["standard_error"] = e.standard_error;
  j["correlators"] = e.correlators;
  Json counts = Json::array();
  for (const auto& row : e.counts) counts.push_back(row);
  j["counts"] = std::move(counts);
  return j;
}

inline Json network_json(const NetworkReport& r) {
  Json j;
  j["reference"] = r.reference;
  Json epochs = Json::array();
  for (TimeStamp t : r.epochs) epochs.push_back(to_json(t));
  j["epochs_fs"] = std::move(epochs);
  Json nodes = Json::array();
  for (const auto& n : r.nodes) {
    Json row;
    row["id"] = n.id;
    row["role"] = std::string(to_string(n.role));
    row["final_stratum"] = n.stratum.empty() || n.stratum.back() == kUnreachable ? Json(nullptr) : Json(n.stratum.back());
    row["holdover"] = n.holdover;
    Json err = Json::array();
    for (Duration d : n.error) err.push_back(to_json(d));
    row["error_fs"] = std::move(err);
    row["in_service"] = n.in_service;
    nodes.push_back(std::move(row));
  }
  j["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const auto& e : r.edges) {
    Json row;
    row["edge"] = e.edge;
    row["upstream"] = e.upstream;
    row["downstream"] = e.downstream;
    row["attempts"] = e.attempts;
    row["successes"] = e.successes;
    row["success_rate"] = e.success_rate();
    edges.push_back(std::move(row));
  }
  j["edges"] = std::move(edges);
  Json strata = Json::array();
  for (const auto& s : r.strata) {
    Json row;
    row["stratum"] = s.stratum;
    row["samples"] = s.samples;
    row["rms_error_fs"] = s.rms_error_fs;
    row["max_abs_error_fs"] = s.max_abs_error_fs;
    strata.push_back(std::move(row));
  }
  j["strata"] = std::move(strata);
  j["max_abs_error_fs"] = r.max_abs_error_fs;
  Json events = Json::array();
  for (const auto& e : r.events) {
    Json row;
    row["edge"] = e.edge;
    row["scheduled_fs"] = to_json(e.scheduled);
    row["success"] = e.success;
    if (e.success) {
      row["clock_offset_fs"] = to_json(e.clock_offset);
      row["flight_time_fs"] = to_json(e.flight_time);
      row["uncertainty_fs"] = to_json(e.uncertainty);
      row["applied_offset_fs"] = to_json(e.applied_offset);
      row["applied_rate"] = e.applied_rate;
    } else {
      row["failure"] = e.failure;
    }
    events.push_back(std::move(row));
  }
  j["events"] = std::move(events);
  return j;
}

inline Json baseline_json(const BaselineSummary& b) {
  Json j;
  Json bounds = Json::array();
  for (const auto& bound : b.bounds) {
    Json row;
    row["name"] = bound.name;
    row["threshold_fs"] = to_json(bound.threshold);
    bounds.push_back(std::move(row));
  }
  j["bounds"] = std::move(bounds);
  auto row_json = [&](const BaselineRow& r) {
    Json row;
    row["node"] = r.node;
    row["samples"] = r.samples;
    Json fr;
    for (std::size_t i = 0; i < b.bounds.size(); ++i) fr[b.bounds[i].name] = r.fraction_within[i];
    row["fraction_within"] = std::move(fr);
    return row;
  };
  Json nodes = Json::array();
  for (const auto& r : b.nodes) nodes.push_back(row_json(r));
  j["nodes"] = std::move(nodes);
  j["overall"] = row_json(b.overall);
  return j;
}

inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// epoch_s,error_fs for one node.
inline std::string node_error_csv(const NetworkReport& r, const NodeSeries& n) {
  std::ostringstream os;
  os << "epoch_s,error_fs,in_service\n";
  for (std::size_t k = 0; k < r.epochs.size(); ++k)
    os << format_double(static_cast<double>(r.epochs[k].seconds())) << ',' << to_string(n.error[k].count()) << ','
       << (n.in_service[k] ? 1 : 0) << '\n';
  return os.str();
}

inline std::string visibility_csv(const std::vector<VisibilityWindow>& windows) {
  std::ostringstream os;
  os << "start_s,end_s,max_elevation_deg\n";
  for (const auto& w : windows)
    os << format_double(w.start_s) << ',' << format_double(w.end_s) << ','
       << format_double(w.max_elevation_rad * 180.0 / std::numbers::pi) << '\n';
  return os.str();
}

}  // namespace qcs::io
