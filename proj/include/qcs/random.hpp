#pragma once

// Seed plumbing. Every random process is driven by std::mt19937_64 seeded
// from a master seed plus a path of stream tags, so any single draw site can
// be replayed in isolation.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace qcs {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Mixes a path of tags into a child seed. derive_seed(s, {a, b}) differs from
// derive_seed(s, {b, a}).
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (auto tag : path) h = splitmix64(h ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng{derive_seed(master, path)};
}

// Stream tags used across modules.
namespace stream {
inline constexpr std::uint64_t kPairBirths = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kDetect = 3;
inline constexpr std::uint64_t kPropagate = 4;
inline constexpr std::uint64_t kClockWalk = 5;
inline constexpr std::uint64_t kClockWhite = 6;
inline constexpr std::uint64_t kBell = 7;
inline constexpr std::uint64_t kNetwork = 8;
}  // namespace stream

// Standard normal keyed by (seed, counter): the same key always gives the
// same value. Used where noise must be a function of time rather than of
// call order.
inline double keyed_normal(std::uint64_t seed, std::uint64_t counter_lo, std::uint64_t counter_hi) {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(counter_lo) ^ splitmix64(counter_hi + 0x5851f42d4c957f2dULL));
  const std::uint64_t b = splitmix64(a);
  // 53-bit uniforms in (0, 1]
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace qcs
