#include "coad/kv_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>

#include "coad/error.hpp"
#include "coad/score_io.hpp"

namespace coad {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string raw;
  for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError("", where + ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("", where + ": empty key");
    if (kv.contains(key)) throw ConfigError(key, where + ": duplicate key '" + key + "'");
    kv.emplace(std::move(key), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  return parse_key_values(in, path.string());
}

void reject_unknown_keys(const KeyValues& kv, std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : kv) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(key, "unknown configuration key '" + key + "'");
    }
  }
}

double kv_double(const KeyValues& kv, std::string_view key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return parse_finite(it->second, "config key '" + std::string(key) + "'");
  } catch (const InputError& e) {
    throw ConfigError(std::string(key), e.what());
  }
}

std::int64_t kv_int(const KeyValues& kv, std::string_view key, std::int64_t fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const std::string& s = it->second;
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(std::string(key), "config key '" + std::string(key) + "': not an integer: '" + s + "'");
  }
  return value;
}

std::string kv_string(const KeyValues& kv, std::string_view key, std::string fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

}  // namespace coad
