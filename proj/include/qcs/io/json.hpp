#pragma once

// JSON helpers: strict object readers that reject unknown keys and report a
// JSON-pointer path, plus femtosecond <-> JSON conversions.

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>

#include <json.hpp>

#include "qcs/error.hpp"
#include "qcs/time.hpp"

namespace qcs::io {

using Json = nlohmann::ordered_json;

// Integers that fit in int64 are written as numbers, wider ones as decimal
// strings.
inline Json fs_to_json(fs_int v) {
  if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max())
    return Json(static_cast<std::int64_t>(v));
  return Json(to_string(v));
}
inline Json to_json(Duration d) { return fs_to_json(d.count()); }
inline Json to_json(TimeStamp t) { return fs_to_json(t.count()); }

class ObjectReader {
public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where(key) + ": required key missing");
    used_.insert(key);
    return j_.at(key);
  }

  ObjectReader object(const std::string& key) { return ObjectReader(raw(key), sub(key)); }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

  std::uint64_t unsigned_integer(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError(where(key) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_integer(key) : fallback;
  }

  // Femtosecond durations: an integer, or a decimal string for values past int64.
  Duration duration(const std::string& key) {
    const Json& v = raw(key);
    if (v.is_number_integer()) return Duration{v.get<std::int64_t>()};
    if (v.is_string()) {
      if (auto p = parse_fs(v.get<std::string>())) return Duration{*p};
    }
    throw ConfigError(where(key) + ": expected an integer femtosecond count");
  }
  Duration duration(const std::string& key, Duration fallback) { return has(key) ? duration(key) : fallback; }

  bool boolean(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return v.get<bool>();
  }
  bool boolean(const std::string& key, bool fallback) { return has(key) ? boolean(key) : fallback; }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, std::string fallback) { return has(key) ? string(key) : fallback; }

  // Throws on any key that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
  }

  std::string sub(const std::string& key) const { return path_ + "/" + key; }

private:
  std::string where() const { return path_.empty() ? "/" : path_; }
  std::string where(const std::string& key) const { return sub(key); }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace qcs::io
