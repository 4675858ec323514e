#pragma once

// One two-way acquisition between node A and node B: both SPDC sources fire
// over the integration window, each keeps one photon and sends the other
// across the link. Produces the four streams the estimator consumes.

#include <cstdint>
#include <string>

#include "qcs/clock.hpp"
#include "qcs/linkmodel.hpp"
#include "qcs/photonics.hpp"
#include "qcs/random.hpp"

namespace qcs {

struct SessionConfig {
  PairSource source_a;
  PairSource source_b;
  Detector detector_a_local;   // A's own photons
  Detector detector_b_remote;  // B detecting A's photons
  Detector detector_b_local;
  Detector detector_a_remote;
  TimeTagger tagger;
  LinkModel link;
  Duration integration = Duration{kFsPerSecond / 10};
  bool ephemeris_compensation = true;  // orbit links only

  void validate() const {
    source_a.validate();
    source_b.validate();
    detector_a_local.validate();
    detector_b_remote.validate();
    detector_b_local.validate();
    detector_a_remote.validate();
    tagger.validate();
    link.validate();
    if (integration <= Duration::zero()) throw ConfigError("session integration window must be positive");
  }
};

struct SessionStreams {
  TagStream local_a;
  TagStream remote_ab;
  TagStream local_b;
  TagStream remote_ba;
};

namespace detail {

struct Arm {
  TagStream local;
  TagStream remote;
};

inline Arm acquire_direction(const SessionConfig& cfg, Direction dir, const ClockState& emitter,
                             const ClockState& receiver, TimeStamp start, std::uint64_t seed,
                             std::uint64_t scenario_hash) {
  const bool ab = dir == Direction::AtoB;
  const std::uint64_t d = ab ? 0 : 1;
  const PairSource& src = ab ? cfg.source_a : cfg.source_b;
  const Detector& det_local = ab ? cfg.detector_a_local : cfg.detector_b_local;
  const Detector& det_remote = ab ? cfg.detector_b_remote : cfg.detector_a_remote;

  const auto births = generate_pair_births(src, cfg.integration, derive_seed(seed, {d, 1}), start);
  const auto arms = split_pairs(births, src, derive_seed(seed, {d, 2}));

  const bool compensate = cfg.ephemeris_compensation && cfg.link.geometry.is_orbit();
  const auto arrivals =
      propagate(arms.remote, cfg.link, dir, derive_seed(seed, {d, 3}), compensate ? std::optional{start} : std::nullopt);

  // Remote dark counts cover the window shifted by the nominal flight time.
  const Duration nominal = time_of_flight(cfg.link, start, dir);
  const TimeStamp remote_start = start + (nominal > Duration::zero() ? nominal : Duration::zero());

  Arm arm;
  arm.local = detect(arms.local, det_local, emitter, cfg.tagger, cfg.integration, derive_seed(seed, {d, 4}), start,
                     ab ? "local_a" : "local_b", ab ? "A" : "B");
  arm.remote = detect(arrivals, det_remote, receiver, cfg.tagger, cfg.integration, derive_seed(seed, {d, 5}),
                      remote_start, ab ? "remote_ab" : "remote_ba", ab ? "B" : "A");
  arm.local.scenario_hash = scenario_hash;
  arm.remote.scenario_hash = scenario_hash;
  return arm;
}

}  // namespace detail

// Throws DomainError when an orbit link is not visible at `start`.
inline SessionStreams acquire_session(const SessionConfig& cfg, const ClockState& clock_a, const ClockState& clock_b,
                                      TimeStamp start, std::uint64_t seed, std::uint64_t scenario_hash = 0) {
  cfg.validate();
  auto ab = detail::acquire_direction(cfg, Direction::AtoB, clock_a, clock_b, start, seed, scenario_hash);
  auto ba = detail::acquire_direction(cfg, Direction::BtoA, clock_b, clock_a, start, seed, scenario_hash);
  return {std::move(ab.local), std::move(ab.remote), std::move(ba.local), std::move(ba.remote)};
}

}  // namespace qcs
