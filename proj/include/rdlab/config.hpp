// Flat key = value configuration: dotted section paths, '#' comments, and a
// canonical serialization so identical experiments hash to the same output
// directory. Keys under "output." are excluded from the hash; they relocate
// artifacts without changing what gets computed.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rdlab/numerics.hpp"

namespace rdlab {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error("config line " + std::to_string(lineno) + ": missing '='");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (!detail::valid_key(key))
        throw config_error("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
      if (cfg.kv_.count(key))
        throw config_error("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                           "'");
      cfg.kv_[key] = value;
    }
    return cfg;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  // Canonical form: sorted keys, single "key = value" per line.
  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : kv_) out << k << " = " << v << "\n";
    return out.str();
  }

  // FNV-1a over the canonical form minus relocation keys.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& [k, v] : kv_) {
      if (k.rfind("output.", 0) == 0) continue;
      for (const std::string* part : {&k, &v}) {
        for (char c : *part) {
          h ^= static_cast<unsigned char>(c);
          h *= 1099511628211ull;
        }
        h ^= '\n';
        h *= 1099511628211ull;
      }
    }
    return h;
  }

  std::string hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  const std::map<std::string, std::string>& items() const { return kv_; }

  std::string get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw config_error("config: missing key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }

  double get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(key, it->second);
  }

  int get_int(const std::string& key) const { return parse_int(key, get_string(key)); }

  int get_int(const std::string& key, int fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_int(key, it->second);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw config_error("config: key '" + key + "' is not a boolean: " + it->second);
  }

  void set(const std::string& key, const std::string& value) {
    if (!detail::valid_key(key)) throw config_error("config: bad key '" + key + "'");
    kv_[key] = detail::trim(value);
  }

  void set(const std::string& key, double value) { set(key, detail::format_g17(value)); }

  void set(const std::string& key, int value) { set(key, std::to_string(value)); }

  void erase(const std::string& key) { kv_.erase(key); }

 private:
  static double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw config_error("config: key '" + key + "' is not a number: " + s);
    }
  }

  static int parse_int(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw config_error("config: key '" + key + "' is not an integer: " + s);
    }
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace rdlab
