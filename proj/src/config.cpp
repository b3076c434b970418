// SPDX-License-Identifier: Apache-2.0

#include "fbq/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace fbq {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "experiment", "M",         "gamma_db", "q",    "B",      "B_range",     "mag_size",
      "dir_sizes",  "n_trials",  "seed",     "output", "outage_split", "threads"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": '" + t + "'");
  }
  if (pos != t.size() || !std::isfinite(v)) {
    throw ConfigError("bad number for " + key + ": '" + t + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("bad non-negative integer for " + key + ": '" + t + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(item, key));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::vector<double> parse_range(const std::string& text, const std::string& key) {
  std::stringstream ss(text);
  std::string part;
  std::vector<double> v;
  while (std::getline(ss, part, ':')) v.push_back(to_double(part, key));
  if (v.size() != 3) throw ConfigError(key + " must be start:stop:step");
  const double start = v[0], stop = v[1], step = v[2];
  if (!(step > 0.0) || stop < start) throw ConfigError(key + " needs step > 0 and stop >= start");
  std::vector<double> out;
  for (std::size_t i = 0;; ++i) {
    const double x = start + static_cast<double>(i) * step;
    if (x > stop + 1e-9 * step) break;
    out.push_back(x);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!known_keys().count(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value");
    kv.emplace_back(key, value);
  }
  return kv;
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  cfg.echo = read_key_values(is);
  bool has_b = false;
  for (const auto& [key, value] : cfg.echo) {
    if (key == "experiment") {
      cfg.experiment = value;
    } else if (key == "M") {
      cfg.num_antennas = static_cast<int>(to_uint(value, key));
    } else if (key == "gamma_db") {
      cfg.gamma_db = parse_list(value, key);
    } else if (key == "q") {
      cfg.q = parse_list(value, key);
    } else if (key == "B") {
      cfg.budgets = {to_double(value, key)};
      has_b = true;
    } else if (key == "B_range") {
      cfg.budgets = parse_range(value, key);
    } else if (key == "mag_size") {
      cfg.mag_size = value == "from-allocation" ? 0 : to_uint(value, key);
    } else if (key == "dir_sizes") {
      cfg.dir_sizes.clear();
      for (double d : parse_list(value, key)) {
        if (d < 2.0 || d != std::floor(d)) throw ConfigError("dir_sizes must be integers >= 2");
        cfg.dir_sizes.push_back(static_cast<std::size_t>(d));
      }
    } else if (key == "n_trials") {
      cfg.n_trials = to_uint(value, key);
    } else if (key == "seed") {
      cfg.seed = to_uint(value, key);
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "outage_split") {
      cfg.outage_split = to_double(value, key);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(to_uint(value, key));
    }
  }
  const bool has_range =
      std::any_of(cfg.echo.begin(), cfg.echo.end(), [](const auto& p) { return p.first == "B_range"; });
  if (has_b && has_range) throw ConfigError("give either B or B_range, not both");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::vector<double> ExperimentConfig::gammas_linear() const {
  std::vector<double> g;
  for (double d : gamma_db) g.push_back(db_to_linear(d));
  return g;
}

void ExperimentConfig::validate() const {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  if (num_antennas < 2 || num_antennas > 8) throw ConfigError("M must be in [2, 8]");
  const auto m = static_cast<std::size_t>(num_antennas);
  if (gamma_db.size() != m) throw ConfigError("gamma_db needs M entries");
  if (q.size() != m) throw ConfigError("q needs M entries");
  for (double x : q) {
    if (!(x > 0.0 && x < 1.0)) throw ConfigError("q entries must be in (0, 1)");
  }
  if (!(outage_split > 0.0 && outage_split < 1.0)) throw ConfigError("outage_split must be in (0, 1)");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  const bool needs_budget =
      experiment == "bit-alloc-compare" || experiment == "bit-shares" || experiment == "distortion";
  if (needs_budget && budgets.empty()) throw ConfigError(experiment + " needs B or B_range");
  for (double b : budgets) {
    if (!(b > 0.0)) throw ConfigError("budgets must be positive");
  }
  if ((experiment == "bit-alloc-compare" || experiment == "distortion")) {
    for (double b : budgets) {
      if (b != std::floor(b)) throw ConfigError(experiment + " needs integer budgets");
    }
  }
  if (experiment == "sdp-vs-bound") {
    if (num_antennas < 3) throw ConfigError("sdp-vs-bound needs M >= 3");
    if (dir_sizes.empty()) throw ConfigError("sdp-vs-bound needs dir_sizes");
  }
  if (experiment == "outage-audit") {
    if (mag_size < 2) throw ConfigError("outage-audit needs mag_size >= 2");
    if (dir_sizes.size() != 1 && dir_sizes.size() != m) {
      throw ConfigError("outage-audit needs one dir_size or one per user");
    }
  }
  if (experiment == "sdp-vs-bound" || experiment == "outage-audit" ||
      (experiment == "distortion" && monte_carlo)) {
    if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  }
  if (experiment == "outage-audit" && n_trials < 10000) {
    throw ConfigError("outage-audit needs n_trials >= 10000");
  }
}

}  // namespace fbq
