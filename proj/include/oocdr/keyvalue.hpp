#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oocdr {

/// Ordered `key=value` lines, as used by sidecar and report files.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_key_values(const std::filesystem::path& path, const KeyValues& kv);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Shortest round-trippable text form of a double.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& what);
std::uint64_t parse_u64(const std::string& s, const std::string& what);

const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& key);

}  // namespace oocdr
