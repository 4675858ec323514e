#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "qcs/io/config.hpp"
#include "qcs/io/report.hpp"
#include "qcs/io/timetag_file.hpp"

using namespace qcs;
using namespace qcs::io;

namespace {

TagStream sample_stream() {
  TagStream s;
  s.channel_id = "remote_ab";
  s.frame = "B";
  s.scenario_hash = 0xfeedbeefULL;
  s.resolution = Duration{1000};
  s.timestamps = {TimeStamp{-5000}, TimeStamp{0}, TimeStamp{3000}, TimeStamp{(static_cast<fs_int>(1) << 80) / 1000 * 1000}};
  return s;
}

std::size_t parse_error_line(const std::string& text) {
  std::istringstream is(text);
  try {
    read_timetag(is, "t.tt");
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

const char* kHeader = "# qcs-timetag v1\n# channel: x\n# resolution_fs: 10\n";

}  // namespace

TEST(Timetag, RoundTrip) {
  const TagStream s = sample_stream();
  std::ostringstream os;
  write_timetag(os, s);
  std::istringstream is(os.str());
  const TagStream back = read_timetag(is);
  EXPECT_EQ(back.channel_id, s.channel_id);
  EXPECT_EQ(back.frame, s.frame);
  EXPECT_EQ(back.scenario_hash, s.scenario_hash);
  EXPECT_EQ(back.resolution, s.resolution);
  EXPECT_EQ(back.timestamps, s.timestamps);
}

TEST(Timetag, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "qcs_test_io";
  std::filesystem::remove_all(dir);
  save_timetag(dir / "a.tt", sample_stream());
  EXPECT_EQ(load_timetag(dir / "a.tt").timestamps, sample_stream().timestamps);
  EXPECT_THROW(load_timetag(dir / "missing.tt"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Timetag, ParseErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("garbage\n"), 1u);
  EXPECT_EQ(parse_error_line("# qcs-timetag v1\n# resolution_fs: 10\n"), 2u);
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "10\n30\n20\n"), 6u);  // unsorted
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "10\n10\n"), 5u);      // duplicate
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "15\n"), 4u);          // off-grid
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "10\n1e5\n"), 5u);
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "# colour: blue\n"), 4u);
}

TEST(Config, ParsesMinimalScenario) {
  const std::string text = R"({
    "seeds": {"master": 3},
    "clocks": {"a": {}, "b": {"initial_offset_fs": "123456789012345678901234"}},
    "sources": {"s": {"pair_rate_hz": 1000}},
    "detectors": {"d": {"efficiency": 0.5}},
    "links": {"l": {"geometry": {"type": "static", "range_m": 1000}, "integration_fs": 1000,
                    "source_a": "s", "source_b": "s", "detector_a_local": "d", "detector_b_remote": "d",
                    "detector_b_local": "d", "detector_a_remote": "d"}},
    "simulate": {"link": "l", "clock_a": "a", "clock_b": "b"}
  })";
  const io::ScenarioConfig cfg = io::parse_scenario_text(text);
  EXPECT_EQ(cfg.seed(), 3u);
  EXPECT_EQ(cfg.clocks.at("b").initial_offset.count(), *parse_fs("123456789012345678901234"));
  EXPECT_EQ(cfg.link("l", "").detector_a_local.efficiency, 0.5);
}

namespace {

std::string config_error(const std::string& text) {
  try {
    io::parse_scenario_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, StrictSchema) {
  EXPECT_NE(config_error(R"({"bogus": 1})").find("/bogus"), std::string::npos);
  EXPECT_NE(config_error(R"({"clocks": {"a": {"offset": 1}}})").find("/clocks/a/offset"), std::string::npos);
  EXPECT_NE(config_error(R"({"clocks": {"a": {"fractional_frequency": "x"}}})").find("/clocks/a/fractional_frequency"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"sources": {"s": {}}})").find("/sources/s/pair_rate_hz"), std::string::npos);
  EXPECT_NE(config_error("{").find("invalid JSON"), std::string::npos);
  EXPECT_NE(config_error(R"({"constants": {"c": 1}})").find("allow_constant_override"), std::string::npos);
  EXPECT_NE(config_error(R"({"simulate": {"link": "x", "clock_a": "a", "clock_b": "b"}})").find("/simulate/link"),
            std::string::npos);
}

TEST(Config, SeedIsMandatory) {
  const io::ScenarioConfig cfg = io::parse_scenario_text("{}");
  try {
    (void)cfg.seed();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/seeds/master"), std::string::npos);
  }
}

TEST(Report, JsonIsStable) {
  CorrelationResult ab, ba;
  ab.peak_offset = Duration{1500};
  ba.peak_offset = Duration{500};
  const TwoWayResult tw = two_way_offset(ab, ba);
  const std::string a = io::two_way_json(tw).dump();
  EXPECT_EQ(a, io::two_way_json(tw).dump());
  EXPECT_EQ(a.find("\"clock_offset_fs\":500"), 1u);
  // Values beyond int64 are emitted as decimal strings.
  EXPECT_EQ(io::to_json(Duration{static_cast<fs_int>(1) << 70}).dump(), "\"1180591620717411303424\"");
}
