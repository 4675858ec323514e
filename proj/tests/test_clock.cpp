#include <gtest/gtest.h>

#include <cmath>

#include "qcs/clock.hpp"

using namespace qcs;

namespace {

ClockModel offset_rate(fs_int offset, double y) {
  ClockModel m;
  m.initial_offset = Duration{offset};
  m.fractional_frequency = y;
  return m;
}

}  // namespace

TEST(Clock, PerfectClockIsIdentity) {
  const ClockState c(ClockModel{}, 1);
  for (fs_int t : {fs_int{0}, fs_int{17}, kFsPerSecond * 100})
    EXPECT_EQ(local_time(c, TimeStamp{t}).count(), t);
}

TEST(Clock, OffsetAndRate) {
  const ClockState c(offset_rate(1000, 1e-9), 1);
  // 1e-9 * 1 s = 1e6 fs.
  EXPECT_EQ(local_time(c, TimeStamp{kFsPerSecond}).count(), kFsPerSecond + 1000 + 1'000'000);
  EXPECT_EQ(clock_offset(c, TimeStamp{0}).count(), 1000);
}

TEST(Clock, DriftIsQuadratic) {
  ClockModel m;
  m.frequency_drift = 1e-12;
  const ClockState c(m, 1);
  // 0.5 * 1e-12 * (10 s)^2 = 5e-11 s = 50000 fs.
  EXPECT_EQ(clock_offset(c, TimeStamp{10 * kFsPerSecond}).count(), 50000);
}

TEST(Clock, ValidationRejectsNonsense) {
  EXPECT_THROW(ClockState(offset_rate(0, 2e-3), 1), ConfigError);
  ClockModel m;
  m.white_phase_sigma = Duration{-1};
  EXPECT_THROW(ClockState(m, 1), ConfigError);
  m = ClockModel{};
  m.random_walk_freq_coeff = -1;
  EXPECT_THROW(ClockState(m, 1), ConfigError);
}

TEST(Clock, InverseMapping) {
  ClockModel m = offset_rate(-123456789, 3.3e-7);
  m.frequency_drift = 1e-10;
  const ClockState c(m, 9);
  for (fs_int t : {fs_int{5}, kFsPerSecond / 3, 7 * kFsPerSecond}) {
    const TimeStamp local = local_time(c, TimeStamp{t});
    const TimeStamp back = true_time_of_local(c, local);
    EXPECT_EQ(local_time(c, back), local);
    EXPECT_LE(std::llabs(static_cast<long long>((back - TimeStamp{t}).count())), 1);
  }
}

TEST(Clock, CorrectionPivotsAtGivenInstant) {
  const ClockState c(offset_rate(5000, 2e-9), 1);
  const TimeStamp at{3 * kFsPerSecond};
  const Duration off = clock_offset(c, at);
  const ClockState fixed = apply_correction(c, off, 2e-9, at);
  EXPECT_EQ(clock_offset(fixed, at).count(), 0);
  EXPECT_LE(std::llabs(static_cast<long long>(clock_offset(fixed, TimeStamp{9 * kFsPerSecond}).count())), 1);
}

TEST(Clock, WhiteNoiseIsKeyedOnTime) {
  ClockModel m;
  m.white_phase_sigma = Duration{1000};
  const ClockState c(m, 77);
  const TimeStamp t{123456};
  EXPECT_EQ(local_time(c, t), local_time(c, t));
  EXPECT_EQ(local_phase(c, t), t);
  double ss = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double e = static_cast<double>((local_time(c, TimeStamp{i * 1000003LL}) - TimeStamp{i * 1000003LL}).count());
    ss += e * e;
  }
  EXPECT_NEAR(std::sqrt(ss / n), 1000.0, 30.0);
}

TEST(Clock, RandomWalkPhaseVariance) {
  // Integrated random-walk frequency: Var[phase(T)] = q^2 T^3 / 3.
  ClockModel m;
  m.random_walk_freq_coeff = 1e-12;
  const TimeStamp t{kFsPerSecond};
  double ss = 0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const ClockState c(m, static_cast<std::uint64_t>(i), Duration{2 * kFsPerSecond});
    const double p = static_cast<double>(c.walk_phase(t));
    ss += p * p;
  }
  const double expected = 1e-12 * 1.0 / std::sqrt(3.0) * 1e15;
  EXPECT_NEAR(std::sqrt(ss / n), expected, 0.2 * expected);
}

TEST(Clock, WalkBeyondHorizonThrows) {
  ClockModel m;
  m.random_walk_freq_coeff = 1e-12;
  const ClockState c(m, 3, Duration{kFsPerSecond});
  EXPECT_THROW(c.walk_phase(TimeStamp{2 * kFsPerSecond}), DomainError);
  EXPECT_EQ(c.walk_phase(TimeStamp{-5}), 0.0L);
}
