#pragma once

// Femtosecond time arithmetic. Every time in the library is an exact signed
// 128-bit count of femtoseconds; overflow throws instead of wrapping.

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "qcs/error.hpp"

namespace qcs {

using fs_int = __int128;

inline constexpr fs_int kFsPerSecond = 1'000'000'000'000'000;
inline constexpr fs_int kFsPerPicosecond = 1'000;
inline constexpr fs_int kFsPerNanosecond = 1'000'000;

namespace detail {

inline fs_int checked_add(fs_int a, fs_int b) {
  fs_int r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("femtosecond addition overflow");
  return r;
}

inline fs_int checked_sub(fs_int a, fs_int b) {
  fs_int r;
  if (__builtin_sub_overflow(a, b, &r)) throw OverflowError("femtosecond subtraction overflow");
  return r;
}

inline fs_int checked_mul(fs_int a, fs_int b) {
  fs_int r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("femtosecond multiplication overflow");
  return r;
}

}  // namespace detail

// Nearest integer, halves away from zero. Throws if the value is not finite
// or would not fit comfortably in 128 bits.
inline fs_int round_fs(long double x) {
  constexpr long double kLimit = 0x1p125L;
  if (!std::isfinite(x) || std::fabs(x) >= kLimit) throw OverflowError("value out of femtosecond range");
  return static_cast<fs_int>(std::roundl(x));
}

// Floor division for a positive divisor.
inline constexpr fs_int floor_div(fs_int a, fs_int b) {
  fs_int q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

// Division rounding halves away from zero; symmetric under negation of a.
inline constexpr fs_int round_div(fs_int a, fs_int b) {
  if (b < 0) { a = -a; b = -b; }
  const fs_int half = b / 2;
  return a >= 0 ? (a + half) / b : -((-a + half) / b);
}

inline std::string to_string(fs_int v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  // magnitude in unsigned space so INT128_MIN is handled
  unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1u : static_cast<unsigned __int128>(v);
  std::string out;
  while (mag != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(mag % 10)));
    mag /= 10;
  }
  if (neg) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

// Parses an optionally signed decimal integer. Returns nullopt on any
// malformed input or overflow.
inline std::optional<fs_int> parse_fs(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i == s.size()) return std::nullopt;
  fs_int v = 0;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') return std::nullopt;
    const int d = c - '0';
    if (__builtin_mul_overflow(v, fs_int{10}, &v)) return std::nullopt;
    if (__builtin_add_overflow(v, fs_int{neg ? -d : d}, &v)) return std::nullopt;
  }
  return v;
}

class Duration {
public:
  constexpr Duration() = default;
  constexpr explicit Duration(fs_int fs) : fs_(fs) {}

  static constexpr Duration zero() { return Duration{0}; }
  static Duration from_seconds(long double s) { return Duration{round_fs(s * static_cast<long double>(kFsPerSecond))}; }
  static constexpr Duration picoseconds(std::int64_t ps) { return Duration{fs_int{ps} * kFsPerPicosecond}; }
  static constexpr Duration nanoseconds(std::int64_t ns) { return Duration{fs_int{ns} * kFsPerNanosecond}; }

  constexpr fs_int count() const { return fs_; }
  long double seconds() const { return static_cast<long double>(fs_) / static_cast<long double>(kFsPerSecond); }
  long double femtoseconds() const { return static_cast<long double>(fs_); }

  friend constexpr auto operator<=>(Duration, Duration) = default;

  Duration operator-() const { return Duration{detail::checked_sub(0, fs_)}; }
  friend Duration operator+(Duration a, Duration b) { return Duration{detail::checked_add(a.fs_, b.fs_)}; }
  friend Duration operator-(Duration a, Duration b) { return Duration{detail::checked_sub(a.fs_, b.fs_)}; }
  friend Duration operator*(Duration a, std::int64_t k) { return Duration{detail::checked_mul(a.fs_, k)}; }
  friend Duration operator*(std::int64_t k, Duration a) { return a * k; }
  Duration& operator+=(Duration o) { return *this = *this + o; }
  Duration& operator-=(Duration o) { return *this = *this - o; }

private:
  fs_int fs_ = 0;
};

inline Duration abs(Duration d) { return d < Duration::zero() ? -d : d; }

// Instant on the scenario timeline (femtoseconds since the scenario epoch).
class TimeStamp {
public:
  constexpr TimeStamp() = default;
  constexpr explicit TimeStamp(fs_int fs) : fs_(fs) {}

  static TimeStamp from_seconds(long double s) { return TimeStamp{round_fs(s * static_cast<long double>(kFsPerSecond))}; }

  constexpr fs_int count() const { return fs_; }
  long double seconds() const { return static_cast<long double>(fs_) / static_cast<long double>(kFsPerSecond); }
  constexpr Duration since_epoch() const { return Duration{fs_}; }

  friend constexpr auto operator<=>(TimeStamp, TimeStamp) = default;

  friend TimeStamp operator+(TimeStamp t, Duration d) { return TimeStamp{detail::checked_add(t.fs_, d.count())}; }
  friend TimeStamp operator+(Duration d, TimeStamp t) { return t + d; }
  friend TimeStamp operator-(TimeStamp t, Duration d) { return TimeStamp{detail::checked_sub(t.fs_, d.count())}; }
  friend Duration operator-(TimeStamp a, TimeStamp b) { return Duration{detail::checked_sub(a.fs_, b.fs_)}; }
  TimeStamp& operator+=(Duration d) { return *this = *this + d; }
  TimeStamp& operator-=(Duration d) { return *this = *this - d; }

private:
  fs_int fs_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Duration d) { return os << to_string(d.count()) << " fs"; }
inline std::ostream& operator<<(std::ostream& os, TimeStamp t) { return os << "t=" << to_string(t.count()) << " fs"; }

}  // namespace qcs
