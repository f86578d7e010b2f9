#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinchain/eig.hpp"  // detail::fnv1a

namespace spinchain {

/// Structured-text experiment description: `key = value` lines, `#`
/// comments, order-insensitive. Typed getters validate on access.
struct ExperimentConfig {
  std::string kind;  // rstat | chi | specfun | liom | jump
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
      throw std::invalid_argument("config: missing required key '" + key + "'");
    return it->second;
  }

  std::string get(const std::string& key, const std::string& def) const {
    auto it = values.find(key);
    return it == values.end() ? def : it->second;
  }

  long get_int(const std::string& key) const { return parse_int(key, get(key)); }
  long get_int(const std::string& key, long def) const {
    return has(key) ? parse_int(key, get(key)) : def;
  }
  double get_double(const std::string& key) const { return parse_double(key, get(key)); }
  double get_double(const std::string& key, double def) const {
    return has(key) ? parse_double(key, get(key)) : def;
  }
  uint64_t get_u64(const std::string& key, uint64_t def) const {
    if (!has(key)) return def;
    return std::stoull(get(key));
  }

  std::vector<double> get_grid(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    if (out.empty()) throw std::invalid_argument("config: empty grid '" + key + "'");
    return out;
  }

  std::vector<std::string> get_list(const std::string& key, const std::string& def) const {
    std::vector<std::string> out;
    std::stringstream ss(get(key, def));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  void validate() const {
    static const std::vector<std::string> kinds{"rstat", "chi", "specfun", "liom", "jump"};
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
      throw std::invalid_argument("config: unknown experiment kind '" + kind + "'");
    if (has("v_grid")) {
      auto g = get_grid("v_grid");
      for (std::size_t i = 1; i < g.size(); ++i)
        if (g[i] <= g[i - 1])
          throw std::invalid_argument("config: v_grid must be strictly increasing");
    }
    if (get_int("realizations", 1) < 1)
      throw std::invalid_argument("config: realizations must be >= 1");
  }

  /// Canonical text: sorted keys, one per line; the hash is therefore
  /// stable under reordering of the input file.
  std::string canonical() const {
    std::string out = "kind=" + kind + "\n";
    for (const auto& [k, v] : values) out += k + "=" + v + "\n";
    return out;
  }

  uint64_t hash() const {
    const std::string c = canonical();
    return detail::fnv1a(c.data(), c.size());
  }

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

 private:
  static long parse_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      long out = std::stol(trim(v), &pos);
      if (pos != trim(v).size()) throw std::invalid_argument("trailing");
      return out;
    } catch (...) {
      throw std::invalid_argument("config: key '" + key + "' is not an integer: " + v);
    }
  }
  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double out = std::stod(trim(v), &pos);
      if (pos != trim(v).size()) throw std::invalid_argument("trailing");
      return out;
    } catch (...) {
      throw std::invalid_argument("config: key '" + key + "' is not a number: " + v);
    }
  }
};

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = ExperimentConfig::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value'");
    const std::string key = ExperimentConfig::trim(line.substr(0, eq));
    const std::string val = ExperimentConfig::trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: empty key");
    if (key == "kind")
      cfg.kind = val;
    else if (!cfg.values.emplace(key, val).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  auto cfg = parse_config(buf.str());
  cfg.validate();
  return cfg;
}

}  // namespace spinchain
