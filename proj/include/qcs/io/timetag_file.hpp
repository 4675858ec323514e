#pragma once

// Plain-text timetag files:
//
//   # qcs-timetag v1
//   # channel: <id>
//   # resolution_fs: <int>
//   [# frame: <clock id>]
//   [# scenario_hash: <uint64>]
//   <timestamp fs>          one per line, strictly increasing, multiples of the resolution

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "qcs/error.hpp"
#include "qcs/photonics.hpp"
#include "qcs/time.hpp"

namespace qcs::io {

inline constexpr std::string_view kTimetagMagic = "# qcs-timetag v1";

inline void write_timetag(std::ostream& os, const TagStream& s) {
  os << kTimetagMagic << '\n';
  os << "# channel: " << s.channel_id << '\n';
  os << "# resolution_fs: " << to_string(s.resolution.count()) << '\n';
  if (!s.frame.empty()) os << "# frame: " << s.frame << '\n';
  if (s.scenario_hash != 0) os << "# scenario_hash: " << s.scenario_hash << '\n';
  for (TimeStamp t : s.timestamps) os << to_string(t.count()) << '\n';
}

namespace detail {

inline bool header_value(std::string_view line, std::string_view key, std::string& value) {
  const std::string prefix = "# " + std::string(key) + ": ";
  if (line.substr(0, prefix.size()) != prefix) return false;
  value = std::string(line.substr(prefix.size()));
  return true;
}

}  // namespace detail

inline TagStream read_timetag(std::istream& is, const std::string& name = "<stream>") {
  TagStream s;
  std::string line;
  std::size_t n = 0;
  auto next = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next() || line != kTimetagMagic) throw ParseError(name, n ? n : 1, "expected '# qcs-timetag v1' header");
  std::string value;
  if (!next() || !detail::header_value(line, "channel", value)) throw ParseError(name, n, "expected '# channel: <id>'");
  s.channel_id = value;
  if (!next() || !detail::header_value(line, "resolution_fs", value))
    throw ParseError(name, n, "expected '# resolution_fs: <int>'");
  const auto res = parse_fs(value);
  if (!res || *res < 1) throw ParseError(name, n, "resolution_fs must be a positive integer");
  s.resolution = Duration{*res};

  bool in_body = false;
  while (next()) {
    if (!in_body && !line.empty() && line[0] == '#') {
      if (detail::header_value(line, "frame", value)) {
        s.frame = value;
      } else if (detail::header_value(line, "scenario_hash", value)) {
        std::uint64_t h = 0;
        std::istringstream hs(value);
        if (!(hs >> h) || !hs.eof()) throw ParseError(name, n, "scenario_hash must be an unsigned integer");
        s.scenario_hash = h;
      } else {
        throw ParseError(name, n, "unknown header line");
      }
      continue;
    }
    in_body = true;
    const auto v = parse_fs(line);
    if (!v) throw ParseError(name, n, "expected a decimal femtosecond timestamp");
    if (floor_div(*v, *res) * *res != *v) throw ParseError(name, n, "timestamp not a multiple of resolution_fs");
    const TimeStamp t{*v};
    if (!s.timestamps.empty() && t <= s.timestamps.back())
      throw ParseError(name, n, "timestamps not strictly increasing");
    s.timestamps.push_back(t);
  }
  return s;
}

// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_timetag(const std::filesystem::path& path, const TagStream& s) {
  std::ostringstream os;
  write_timetag(os, s);
  write_file_atomic(path, os.str());
}

inline TagStream load_timetag(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_timetag(in, path.string());
}

}  // namespace qcs::io
