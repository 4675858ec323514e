#pragma once

// Optical space-ground channel: geometry, propagation delay with the Shapiro
// term, transmittance, channel jitter, deliberate non-reciprocity, and the
// gravitational + velocity rate offset of an orbiting clock.
//
// Frames: Earth-centred inertial, spherical Earth rotating about +z with the
// prime meridian on +x at t = 0. Node A is the ground station, node B the
// satellite.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "qcs/error.hpp"
#include "qcs/random.hpp"
#include "qcs/time.hpp"

namespace qcs {

struct PhysicalConstants {
  double c = 299792458.0;               // m/s
  double gm_earth = 3.986004418e14;     // m^3/s^2
  double earth_radius = 6371000.0;      // m
  double earth_rotation_rate = 7.2921159e-5;  // rad/s
};

inline constexpr PhysicalConstants kEarth{};

struct Vec3 {
  long double x = 0, y = 0, z = 0;

  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  long double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  long double norm() const { return std::sqrt(dot(*this)); }
};

struct StaticRange {
  double range_m = 0.0;
};

struct GroundStation {
  double lat_rad = 0.0;
  double lon_rad = 0.0;
  double alt_m = 0.0;
};

struct CircularOrbit {
  double altitude_m = 550e3;
  double inclination_rad = 0.0;
  double raan_rad = 0.0;
  double phase0_rad = 0.0;
  GroundStation station;
};

inline constexpr double kDefaultElevationMask = 10.0 * std::numbers::pi / 180.0;

struct GeometryScenario {
  std::variant<StaticRange, CircularOrbit> variant;
  double elevation_mask_rad = kDefaultElevationMask;
  PhysicalConstants constants = kEarth;

  bool is_orbit() const { return std::holds_alternative<CircularOrbit>(variant); }

  void validate() const {
    if (!(elevation_mask_rad >= 0.0 && elevation_mask_rad < std::numbers::pi / 2))
      throw ConfigError("elevation_mask must lie in [0, pi/2)");
    if (const auto* s = std::get_if<StaticRange>(&variant)) {
      if (!(s->range_m > 0.0) || !std::isfinite(s->range_m)) throw ConfigError("static range must be > 0");
    } else {
      const auto& o = std::get<CircularOrbit>(variant);
      if (!(o.altitude_m > 100e3)) throw ConfigError("orbit altitude must exceed 100 km");
    }
  }
};

enum class Direction { AtoB, BtoA };

struct LinkModel {
  GeometryScenario geometry;
  double transmittance = 1.0;
  Duration channel_jitter_sigma;
  Duration nonreciprocity_bias;  // A->B minus B->A flight time
  bool include_shapiro = false;
  // Unmodelled delay terms (higher-order curvature, perturbations) injected as
  // a constant added to both directions.
  Duration extra_delay_bias;

  void validate() const {
    geometry.validate();
    if (!(transmittance > 0.0 && transmittance <= 1.0)) throw ConfigError("link transmittance must lie in (0, 1]");
    if (channel_jitter_sigma < Duration::zero()) throw ConfigError("link channel_jitter_sigma must be >= 0");
  }
};

inline double orbit_radius(const CircularOrbit& o, const PhysicalConstants& k = kEarth) {
  return k.earth_radius + o.altitude_m;
}

inline double orbital_period(const CircularOrbit& o, const PhysicalConstants& k = kEarth) {
  const double a = orbit_radius(o, k);
  return 2.0 * std::numbers::pi * std::sqrt(a * a * a / k.gm_earth);
}

inline Vec3 satellite_position(const CircularOrbit& o, long double t_s, const PhysicalConstants& k = kEarth) {
  const long double a = orbit_radius(o, k);
  const long double n = std::sqrt(static_cast<long double>(k.gm_earth) / (a * a * a));
  const long double u = o.phase0_rad + n * t_s;
  const long double cu = std::cos(u), su = std::sin(u);
  const long double ci = std::cos(static_cast<long double>(o.inclination_rad));
  const long double si = std::sin(static_cast<long double>(o.inclination_rad));
  const long double cr = std::cos(static_cast<long double>(o.raan_rad));
  const long double sr = std::sin(static_cast<long double>(o.raan_rad));
  return {a * (cr * cu - sr * su * ci), a * (sr * cu + cr * su * ci), a * su * si};
}

inline Vec3 station_position(const GroundStation& g, long double t_s, const PhysicalConstants& k = kEarth) {
  const long double r = static_cast<long double>(k.earth_radius) + g.alt_m;
  const long double theta = g.lon_rad + static_cast<long double>(k.earth_rotation_rate) * t_s;
  const long double cl = std::cos(static_cast<long double>(g.lat_rad));
  return {r * cl * std::cos(theta), r * cl * std::sin(theta), r * std::sin(static_cast<long double>(g.lat_rad))};
}

struct RangeSample {
  double range_m = 0.0;
  double elevation_rad = std::numbers::pi / 2;
  bool visible = true;
};

inline double elevation_of(const Vec3& station, const Vec3& sat) {
  const Vec3 rho = sat - station;
  const long double s = rho.dot(station) / (rho.norm() * station.norm());
  return static_cast<double>(std::asin(std::clamp(s, -1.0L, 1.0L)));
}

// Instantaneous station-satellite distance. Below the elevation mask the
// sample is returned with visible = false rather than thrown.
inline RangeSample slant_range(const GeometryScenario& g, TimeStamp true_time) {
  if (const auto* s = std::get_if<StaticRange>(&g.variant)) return {s->range_m, std::numbers::pi / 2, true};
  const auto& o = std::get<CircularOrbit>(g.variant);
  const long double t = true_time.seconds();
  const Vec3 sat = satellite_position(o, t, g.constants);
  const Vec3 gs = station_position(o.station, t, g.constants);
  RangeSample r;
  r.range_m = static_cast<double>((sat - gs).norm());
  r.elevation_rad = elevation_of(gs, sat);
  r.visible = r.elevation_rad >= g.elevation_mask_rad;
  return r;
}

// Extra light time near Earth's mass, in (fractional) femtoseconds:
// (2 GM / c^3) ln((r1 + r2 + R) / (r1 + r2 - R)).
inline long double shapiro_delay_fs(double r1, double r2, double straight_range, const PhysicalConstants& k = kEarth) {
  if (!(r1 > 0.0) || !(r2 > 0.0) || !(straight_range >= 0.0)) throw DomainError("shapiro_delay: radii must be > 0");
  const long double s = static_cast<long double>(r1) + r2;
  const long double den = s - straight_range;
  if (!(den > 0.0L)) throw DomainError("shapiro_delay: degenerate geometry (r1 + r2 <= R)");
  const long double c = k.c;
  const long double scale = 2.0L * static_cast<long double>(k.gm_earth) / (c * c * c);
  return scale * std::log((s + straight_range) / den) * static_cast<long double>(kFsPerSecond);
}

inline Duration shapiro_delay(double r1, double r2, double straight_range, const PhysicalConstants& k = kEarth) {
  return Duration{round_fs(shapiro_delay_fs(r1, r2, straight_range, k))};
}

inline constexpr int kMaxLightTimeIterations = 5;

struct FlightTime {
  long double geometric_s = 0.0;  // light time along the straight path
  long double shapiro_fs = 0.0;
  int iterations = 0;
};

// Light time from the emitter (at emit time) to the receiver (at arrival).
inline FlightTime geometric_flight_time(const GeometryScenario& g, TimeStamp emit, Direction dir) {
  const PhysicalConstants& k = g.constants;
  if (const auto* s = std::get_if<StaticRange>(&g.variant))
    return {static_cast<long double>(s->range_m) / static_cast<long double>(k.c), 0.0L, 0};
  const auto& o = std::get<CircularOrbit>(g.variant);
  const long double te = emit.seconds();
  const Vec3 sat_e = satellite_position(o, te, k);
  const Vec3 gs_e = station_position(o.station, te, k);
  if (elevation_of(gs_e, sat_e) < g.elevation_mask_rad) throw DomainError("link not visible at emit time");

  const bool up = dir == Direction::AtoB;
  const Vec3 tx = up ? gs_e : sat_e;
  auto rx_at = [&](long double t) { return up ? satellite_position(o, t, k) : station_position(o.station, t, k); };

  const long double c = k.c;
  long double tau = (sat_e - gs_e).norm() / c;
  FlightTime ft;
  for (int i = 1; i <= kMaxLightTimeIterations; ++i) {
    const Vec3 rx = rx_at(te + tau);
    const long double next = (rx - tx).norm() / c;
    const long double delta = std::fabs(next - tau);
    tau = next;
    ft.iterations = i;
    if (delta < 1e-15L) {
      ft.geometric_s = tau;
      ft.shapiro_fs = shapiro_delay_fs(static_cast<double>(tx.norm()), static_cast<double>(rx.norm()),
                                       static_cast<double>(tau * c), k);
      return ft;
    }
  }
  throw DomainError("light-time iteration did not converge");
}

// Predictable part of the delay: geometry plus Shapiro when enabled.
inline Duration predicted_flight_time(const LinkModel& link, TimeStamp emit, Direction dir) {
  const FlightTime ft = geometric_flight_time(link.geometry, emit, dir);
  long double fs = ft.geometric_s * static_cast<long double>(kFsPerSecond);
  if (link.include_shapiro) fs += ft.shapiro_fs;
  return Duration{round_fs(fs)};
}

// Bias part: the constant injected delay plus this direction's share of the
// non-reciprocity. The A->B share is the ceiling half so the two directions
// differ by exactly the configured bias.
inline Duration bias_share(const LinkModel& link, Direction dir) {
  const Duration half{link.nonreciprocity_bias.count() / 2};
  const Duration share = dir == Direction::AtoB ? link.nonreciprocity_bias - half : -half;
  return link.extra_delay_bias + share;
}

inline Duration time_of_flight(const LinkModel& link, TimeStamp emit, Direction dir) {
  return predicted_flight_time(link, emit, dir) + bias_share(link, dir);
}

// Mean of the two predicted one-way delays, rounded half away from zero.
inline Duration reciprocal_flight_time(const LinkModel& link, TimeStamp emit) {
  const Duration sum = predicted_flight_time(link, emit, Direction::AtoB) + predicted_flight_time(link, emit, Direction::BtoA);
  return Duration{round_div(sum.count(), fs_int{2})};
}

// Fractional rate of the satellite clock relative to a ground clock
// (positive = satellite runs fast): GM/c^2 (1/R_ground - 1/r) - v^2 / (2 c^2).
inline double relativistic_rate_offset(const GeometryScenario& g) {
  const auto* o = std::get_if<CircularOrbit>(&g.variant);
  if (!o) throw DomainError("relativistic_rate_offset requires an orbit geometry");
  const PhysicalConstants& k = g.constants;
  const long double r = orbit_radius(*o, k);
  const long double c2 = static_cast<long double>(k.c) * k.c;
  const long double gm = k.gm_earth;
  const long double v2 = gm / r;
  return static_cast<double>(gm / c2 * (1.0L / k.earth_radius - 1.0L / r) - v2 / (2.0L * c2));
}

// Photon transport through the channel. Each photon survives with the link
// transmittance, is delayed by the flight time at its emit instant, and picks
// up Gaussian channel jitter.
//
// With `compensate_from` set, the receiver removes the predictable part of the
// delay using a perfect ephemeris: both the variation over the window and the
// known up/down geometric asymmetry. Every survivor is shifted by the mean of
// the two predicted flight times at that instant plus the bias share, so only
// the unknown asymmetry and jitter remain.
inline std::vector<TimeStamp> propagate(const std::vector<TimeStamp>& stream_true, const LinkModel& link, Direction dir,
                                        std::uint64_t seed, std::optional<TimeStamp> compensate_from = std::nullopt) {
  link.validate();
  if (!std::is_sorted(stream_true.begin(), stream_true.end())) throw ConfigError("propagate: input must be sorted");
  Rng rng = make_rng(seed, {stream::kPropagate, dir == Direction::AtoB ? 0u : 1u});
  std::bernoulli_distribution survive(link.transmittance);
  const double jitter = static_cast<double>(link.channel_jitter_sigma.femtoseconds());
  std::normal_distribution<double> jitter_dist(0.0, jitter > 0.0 ? jitter : 1.0);

  std::optional<Duration> fixed_shift;
  if (compensate_from) fixed_shift = reciprocal_flight_time(link, *compensate_from) + bias_share(link, dir);
  else if (!link.geometry.is_orbit()) fixed_shift = time_of_flight(link, TimeStamp{0}, dir);

  std::vector<TimeStamp> out;
  out.reserve(static_cast<std::size_t>(static_cast<double>(stream_true.size()) * link.transmittance * 1.1) + 16);
  for (TimeStamp t : stream_true) {
    if (!survive(rng)) continue;
    Duration shift = fixed_shift ? *fixed_shift : time_of_flight(link, t, dir);
    if (jitter > 0.0) shift += Duration{round_fs(jitter_dist(rng))};
    out.push_back(t + shift);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct VisibilityWindow {
  double start_s = 0.0;
  double end_s = 0.0;
  double max_elevation_rad = 0.0;
};

// Scans [start, end] at `step` and returns contiguous visible intervals.
inline std::vector<VisibilityWindow> visibility_windows(const GeometryScenario& g, TimeStamp start, TimeStamp end,
                                                        Duration step) {
  if (step <= Duration::zero()) throw ConfigError("visibility scan step must be positive");
  std::vector<VisibilityWindow> out;
  std::optional<VisibilityWindow> open;
  for (TimeStamp t = start; t <= end; t += step) {
    const RangeSample r = slant_range(g, t);
    const double ts = static_cast<double>(t.seconds());
    if (r.visible) {
      if (!open) open = VisibilityWindow{ts, ts, r.elevation_rad};
      open->end_s = ts;
      open->max_elevation_rad = std::max(open->max_elevation_rad, r.elevation_rad);
    } else if (open) {
      out.push_back(*open);
      open.reset();
    }
  }
  if (open) out.push_back(*open);
  return out;
}

}  // namespace qcs
