#include "oocdr/keyvalue.hpp"

#include <charconv>
#include <fstream>

#include "oocdr/types.hpp"

namespace oocdr {

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing (" + path.string() + ")");
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    if (!out) throw IoError("write failed (" + path.string() + ")");
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open (" + path.string() + ")");
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed line '" + line + "' (" + path.string() + ")");
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ValidationError("cannot parse " + what + " from '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ValidationError("cannot parse " + what + " from '" + s + "'");
    return v;
}

const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError("missing key '" + key + "'");
    return it->second;
}

}  // namespace oocdr
