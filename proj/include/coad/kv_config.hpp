#pragma once

// Flat `key = value` configuration files. '#' starts a comment line.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

namespace coad {

using KeyValues = std::map<std::string, std::string, std::less<>>;

KeyValues parse_key_values(std::istream& in, const std::string& source);
KeyValues read_key_values(const std::filesystem::path& path);

/// Throws ConfigError naming the first key not in `known`.
void reject_unknown_keys(const KeyValues& kv, std::initializer_list<std::string_view> known);

double kv_double(const KeyValues& kv, std::string_view key, double fallback);
std::int64_t kv_int(const KeyValues& kv, std::string_view key, std::int64_t fallback);
std::string kv_string(const KeyValues& kv, std::string_view key, std::string fallback);

}  // namespace coad
