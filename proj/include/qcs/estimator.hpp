#pragma once

// Two-way offset estimation from timetag streams.
//
// cross_correlate builds a sparse coarse histogram of (remote - local)
// differences with a two-pointer sweep, picks the global maximum, and refines
// the peak position with an iterated centroid over a data-centred window.
// two_way_offset combines the A->B and B->A peaks; frequency_track fits a line
// through block-wise two-way offsets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcs/error.hpp"
#include "qcs/photonics.hpp"
#include "qcs/time.hpp"

namespace qcs {

struct CorrelationConfig {
  Duration search_window = Duration{10 * kFsPerSecond / 1000};  // 10 ms
  Duration coarse_bin = Duration{kFsPerNanosecond};
  Duration fine_bin = Duration{kFsPerPicosecond};
  int refine_span_bins = 3;
  double significance_sigma = 6.0;
  int block_count = 1;

  void validate() const {
    if (fine_bin < Duration{1}) throw ConfigError("correlation fine_bin must be >= 1 fs");
    if (!(fine_bin <= coarse_bin && coarse_bin <= search_window))
      throw ConfigError("correlation bins must satisfy fine_bin <= coarse_bin <= search_window");
    if (refine_span_bins < 0) throw ConfigError("correlation refine_span_bins must be >= 0");
    if (!(significance_sigma > 0.0)) throw ConfigError("correlation significance_sigma must be > 0");
    if (block_count < 1) throw ConfigError("correlation block_count must be >= 1");
  }
};

struct HistogramBin {
  std::int64_t index = 0;
  std::uint64_t count = 0;
  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

// Histogram over [-W, W] with bin i covering [-W + i*w, -W + (i+1)*w).
// Only non-empty bins are stored, in increasing index order.
struct SparseHistogram {
  Duration origin;
  Duration bin_width;
  std::int64_t bin_count = 0;
  std::vector<HistogramBin> bins;
  std::uint64_t total = 0;

  Duration bin_center(std::int64_t index) const {
    return origin + Duration{bin_width.count() * index + bin_width.count() / 2};
  }
};

inline std::int64_t coarse_bin_count(const CorrelationConfig& cfg) {
  return static_cast<std::int64_t>((2 * cfg.search_window.count()) / cfg.coarse_bin.count()) + 1;
}

// Calls f(diff) for every remote - local difference in [lo, hi]. Cost is
// O(N + M + number of visited pairs); the remote cursor only moves forward.
template <class F>
void for_each_difference(const std::vector<TimeStamp>& local, const std::vector<TimeStamp>& remote, Duration lo,
                         Duration hi, F&& f) {
  std::size_t first = 0;
  const std::size_t m = remote.size();
  for (TimeStamp l : local) {
    const TimeStamp from = l + lo;
    while (first < m && remote[first] < from) ++first;
    const TimeStamp to = l + hi;
    for (std::size_t j = first; j < m && remote[j] <= to; ++j) f(remote[j] - l);
  }
}

inline SparseHistogram coarse_histogram(const TagStream& local, const TagStream& remote, const CorrelationConfig& cfg) {
  cfg.validate();
  SparseHistogram h;
  h.origin = -cfg.search_window;
  h.bin_width = cfg.coarse_bin;
  h.bin_count = coarse_bin_count(cfg);
  const fs_int w = cfg.search_window.count();
  const fs_int bw = cfg.coarse_bin.count();

  std::vector<std::int64_t> idx;
  for_each_difference(local.timestamps, remote.timestamps, -cfg.search_window, cfg.search_window,
                      [&](Duration d) { idx.push_back(static_cast<std::int64_t>((d.count() + w) / bw)); });
  std::sort(idx.begin(), idx.end());
  h.total = idx.size();
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && idx[j] == idx[i]) ++j;
    h.bins.push_back({idx[i], static_cast<std::uint64_t>(j - i)});
    i = j;
  }
  return h;
}

struct HistogramSummary {
  Duration bin_width;
  Duration span_start;  // left edge of the first bin
  std::vector<std::uint64_t> counts;
};

struct CorrelationResult {
  Duration peak_offset;           // refined centroid
  Duration coarse_peak_center;
  std::uint64_t peak_counts = 0;  // counts in the coarse peak bin
  double background_mean = 0.0;   // per coarse bin
  double background_sigma = 0.0;
  double significance = 0.0;
  double peak_width_fs = 0.0;         // std of the differences in the refined window
  std::uint64_t window_counts = 0;    // differences inside the refined window
  HistogramSummary histogram;         // fine histogram across the refined window
};

inline constexpr double kRefineWidthSigmas = 4.0;
inline constexpr int kMaxRefineIterations = 64;
inline constexpr std::size_t kMaxSummaryBins = 4096;

namespace detail {

struct Background {
  double mean = 0.0;
  double sigma = 1.0;
};

// Statistics of the coarse bins outside peak +/- span. Empty bins count as
// zeros. The spread is floored at sqrt(mean) (Poisson) and at one count,
// since a sparse histogram's sample spread says little about its tail.
inline Background background_stats(const SparseHistogram& h, std::int64_t peak, std::int64_t span) {
  const std::int64_t lo = std::max<std::int64_t>(0, peak - span);
  const std::int64_t hi = std::min<std::int64_t>(h.bin_count - 1, peak + span);
  const std::int64_t n = h.bin_count - (hi - lo + 1);
  Background b;
  if (n <= 0) return b;
  long double sum = 0, sum2 = 0;
  for (const auto& bin : h.bins) {
    if (bin.index >= lo && bin.index <= hi) continue;
    const long double c = static_cast<long double>(bin.count);
    sum += c;
    sum2 += c * c;
  }
  const long double mean = sum / n;
  const long double var = std::max(0.0L, sum2 / n - mean * mean);
  b.mean = static_cast<double>(mean);
  b.sigma = std::max({static_cast<double>(std::sqrt(var)), std::sqrt(b.mean), 1.0});
  return b;
}

}  // namespace detail

inline CorrelationResult cross_correlate(const TagStream& local, const TagStream& remote, const CorrelationConfig& cfg) {
  cfg.validate();
  if (local.empty() || remote.empty()) throw EmptyOverlapError("cross_correlate: empty stream");
  const SparseHistogram coarse = coarse_histogram(local, remote, cfg);
  if (coarse.total == 0) throw EmptyOverlapError("cross_correlate: no differences inside the search window");

  // Strict > keeps the smallest index (smallest offset) on ties.
  const HistogramBin* peak = &coarse.bins.front();
  for (const auto& b : coarse.bins)
    if (b.count > peak->count) peak = &b;

  CorrelationResult r;
  r.peak_counts = peak->count;
  r.coarse_peak_center = coarse.bin_center(peak->index);
  const auto bg = detail::background_stats(coarse, peak->index, cfg.refine_span_bins);
  r.background_mean = bg.mean;
  r.background_sigma = bg.sigma;
  r.significance = (static_cast<double>(r.peak_counts) - bg.mean) / bg.sigma;
  if (r.significance < cfg.significance_sigma)
    throw NoPeakError("cross_correlate: no significant peak (significance " + std::to_string(r.significance) + ")",
                      r.significance);

  // Differences around the coarse peak, sorted.
  const Duration half_span{cfg.coarse_bin.count() * cfg.refine_span_bins + cfg.coarse_bin.count() / 2};
  Duration lo = r.coarse_peak_center - half_span;
  Duration hi = r.coarse_peak_center + half_span;
  lo = std::max(lo, -cfg.search_window);
  hi = std::min(hi, cfg.search_window);
  std::vector<fs_int> diffs;
  for_each_difference(local.timestamps, remote.timestamps, lo, hi, [&](Duration d) { diffs.push_back(d.count()); });
  std::sort(diffs.begin(), diffs.end());

  // Iterated centroid: mean and spread of the differences within
  // center +/- max(4 sigma, fine_bin). Every step is a function of the
  // selected differences relative to the current center, so the converged
  // estimate moves exactly with any shift of the data.
  fs_int center = r.coarse_peak_center.count();
  fs_int half = half_span.count();
  std::size_t sel_lo = 0, sel_hi = 0;
  double width = 0.0;
  for (int it = 0; it < kMaxRefineIterations; ++it) {
    const auto a = static_cast<std::size_t>(std::lower_bound(diffs.begin(), diffs.end(), center - half) - diffs.begin());
    const auto b = static_cast<std::size_t>(std::upper_bound(diffs.begin(), diffs.end(), center + half) - diffs.begin());
    if (a == b) break;
    if (it > 0 && a == sel_lo && b == sel_hi) break;
    sel_lo = a;
    sel_hi = b;
    const fs_int n = static_cast<fs_int>(b - a);
    fs_int sum = 0;
    for (std::size_t i = a; i < b; ++i) sum += diffs[i] - center;
    const fs_int next = center + round_div(sum, n);
    long double ss = 0;
    for (std::size_t i = a; i < b; ++i) {
      const long double dv = static_cast<long double>(diffs[i] - next);
      ss += dv * dv;
    }
    width = static_cast<double>(std::sqrt(ss / static_cast<long double>(n)));
    center = next;
    half = std::max<fs_int>(static_cast<fs_int>(std::ceil(kRefineWidthSigmas * width)), cfg.fine_bin.count());
  }

  r.peak_offset = Duration{center};
  r.peak_width_fs = width;
  r.window_counts = sel_hi - sel_lo;

  const fs_int fb = cfg.fine_bin.count();
  r.histogram.bin_width = cfg.fine_bin;
  r.histogram.span_start = Duration{center - half};
  const auto nbins = static_cast<std::size_t>((2 * half) / fb + 1);
  if (nbins <= kMaxSummaryBins) {
    r.histogram.counts.assign(nbins, 0);
    for (std::size_t i = sel_lo; i < sel_hi; ++i) {
      const auto k = static_cast<std::size_t>((diffs[i] - (center - half)) / fb);
      if (k < nbins) ++r.histogram.counts[k];
    }
  }
  return r;
}

// Width / sqrt(counts), a 1-sigma uncertainty of the peak position. `n_pairs`
// overrides the number of counts in the refined window.
inline Duration estimate_uncertainty(const CorrelationResult& result, std::optional<std::uint64_t> n_pairs = std::nullopt) {
  const std::uint64_t n = n_pairs.value_or(result.window_counts);
  if (n == 0 || result.peak_width_fs == 0.0) return Duration::zero();
  return Duration{round_fs(result.peak_width_fs / std::sqrt(static_cast<long double>(n)))};
}

struct TwoWayResult {
  Duration clock_offset;  // B minus A
  Duration flight_time;
  Duration offset_uncertainty;
  CorrelationResult ab;
  CorrelationResult ba;
};

// theta = (d_AB - d_BA) / 2 and T_f = (d_AB + d_BA) / 2, halves truncated
// toward zero.
inline TwoWayResult two_way_offset(const CorrelationResult& d_ab, const CorrelationResult& d_ba) {
  const fs_int ab = d_ab.peak_offset.count();
  const fs_int ba = d_ba.peak_offset.count();
  TwoWayResult r;
  r.clock_offset = Duration{detail::checked_sub(ab, ba) / 2};
  r.flight_time = Duration{detail::checked_add(ab, ba) / 2};
  if (r.flight_time < Duration::zero())
    throw EstimationError("two_way_offset: negative flight time (are the directions swapped?)");
  const long double u_ab = estimate_uncertainty(d_ab).femtoseconds();
  const long double u_ba = estimate_uncertainty(d_ba).femtoseconds();
  r.offset_uncertainty = Duration{round_fs(0.5L * std::sqrt(u_ab * u_ab + u_ba * u_ba))};
  r.ab = d_ab;
  r.ba = d_ba;
  return r;
}

// Convenience: both correlations plus the combination.
inline TwoWayResult estimate_two_way(const TagStream& local_a, const TagStream& remote_ab, const TagStream& local_b,
                                     const TagStream& remote_ba, const CorrelationConfig& cfg) {
  return two_way_offset(cross_correlate(local_a, remote_ab, cfg), cross_correlate(local_b, remote_ba, cfg));
}

struct BlockOffset {
  TimeStamp midpoint;  // A-frame local time
  bool valid = false;
  Duration clock_offset;
  Duration uncertainty;
  std::string failure;
};

struct FrequencyFit {
  double fractional_frequency = 0.0;  // slope of theta against A-frame local time
  double slope_standard_error = 0.0;
  Duration offset_at_epoch;           // intercept at A-frame local time 0
  double residual_rms_fs = 0.0;
  std::vector<BlockOffset> block_offsets;
  std::vector<std::string> warnings;

  std::size_t valid_blocks() const {
    return static_cast<std::size_t>(
        std::count_if(block_offsets.begin(), block_offsets.end(), [](const BlockOffset& b) { return b.valid; }));
  }
};

struct LineFit {
  long double slope = 0;
  long double intercept = 0;  // at x = 0
  long double residual_rms = 0;
  long double slope_se = 0;
};

// Ordinary least squares; x centred internally.
inline LineFit fit_line(const std::vector<long double>& x, const std::vector<long double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InsufficientDataError("line fit needs at least two points");
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw InsufficientDataError("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  long double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double e = y[i] - (f.intercept + f.slope * x[i]);
    ssr += e * e;
  }
  f.residual_rms = std::sqrt(ssr / n);
  f.slope_se = n > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0L;
  return f;
}

namespace detail {

// Events of `s` whose mapped A-frame time (t + shift) falls in [lo, hi).
inline TagStream slice(const TagStream& s, Duration shift, TimeStamp lo, TimeStamp hi) {
  TagStream out;
  out.channel_id = s.channel_id;
  out.frame = s.frame;
  out.resolution = s.resolution;
  out.scenario_hash = s.scenario_hash;
  const auto first = std::lower_bound(s.timestamps.begin(), s.timestamps.end(), lo - shift);
  const auto last = std::lower_bound(s.timestamps.begin(), s.timestamps.end(), hi - shift);
  out.timestamps.assign(first, last);
  return out;
}

}  // namespace detail

// Block-wise two-way offsets against A-frame local time, with a least-squares
// line through them. Blocks are equal slices of the A-frame span; B-frame
// streams are mapped into the A frame with the whole-window peaks.
inline FrequencyFit frequency_track(const TagStream& local_a, const TagStream& remote_ab, const TagStream& local_b,
                                    const TagStream& remote_ba, const CorrelationConfig& cfg) {
  cfg.validate();
  if (cfg.block_count < 2) throw ConfigError("frequency_track needs block_count >= 2");
  if (local_a.empty() || remote_ba.empty()) throw InsufficientDataError("frequency_track: empty A-frame stream");

  Duration d_ab0, d_ba0;
  try {
    d_ab0 = cross_correlate(local_a, remote_ab, cfg).peak_offset;
    d_ba0 = cross_correlate(local_b, remote_ba, cfg).peak_offset;
  } catch (const EstimationError& e) {
    throw InsufficientDataError(std::string("frequency_track: whole-window correlation failed: ") + e.what());
  }

  const TimeStamp start = std::min(local_a.timestamps.front(), remote_ba.timestamps.front());
  const TimeStamp end = std::max(local_a.timestamps.back(), remote_ba.timestamps.back()) + Duration{1};
  const Duration span = end - start;
  const fs_int n = cfg.block_count;

  FrequencyFit fit;
  std::vector<long double> xs, ys;
  for (fs_int k = 0; k < n; ++k) {
    const TimeStamp lo = start + Duration{span.count() * k / n};
    const TimeStamp hi = start + Duration{span.count() * (k + 1) / n};
    BlockOffset b;
    b.midpoint = TimeStamp{lo.count() + (hi - lo).count() / 2};
    try {
      const TwoWayResult tw = two_way_offset(
          cross_correlate(detail::slice(local_a, Duration::zero(), lo, hi),
                          detail::slice(remote_ab, -d_ab0, lo, hi), cfg),
          cross_correlate(detail::slice(local_b, d_ba0, lo, hi), detail::slice(remote_ba, Duration::zero(), lo, hi),
                          cfg));
      b.valid = true;
      b.clock_offset = tw.clock_offset;
      b.uncertainty = tw.offset_uncertainty;
      xs.push_back(static_cast<long double>(b.midpoint.count()));
      ys.push_back(static_cast<long double>(b.clock_offset.count()));
    } catch (const EstimationError& e) {
      b.failure = e.what();
    }
    fit.block_offsets.push_back(std::move(b));
  }
  if (xs.size() < 2) throw InsufficientDataError("frequency_track: fewer than two significant blocks");

  // Centre x for conditioning, then move the intercept back to local time 0.
  const long double x0 = xs.front();
  for (auto& x : xs) x -= x0;
  const LineFit line = fit_line(xs, ys);
  fit.fractional_frequency = static_cast<double>(line.slope);
  fit.slope_standard_error = static_cast<double>(line.slope_se);
  fit.offset_at_epoch = Duration{round_fs(line.intercept - line.slope * x0)};
  fit.residual_rms_fs = static_cast<double>(line.residual_rms);

  const long double block_fs = static_cast<long double>(span.count()) / static_cast<long double>(n);
  if (std::fabs(line.slope) * block_fs >= static_cast<long double>(cfg.fine_bin.count()))
    fit.warnings.push_back("offset drifts by more than one fine bin within a block; shorten the blocks");
  return fit;
}

}  // namespace qcs
