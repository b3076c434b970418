// SPDX-License-Identifier: Apache-2.0
//
// Flat `key = value` experiment configuration. Blank lines and lines starting
// with '#' are ignored; unknown or repeated keys are errors.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fbq/common.hpp"

namespace fbq {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "sdp-vs-bound", "bit-alloc-compare", "bit-shares", "distortion", "outage-audit"};
  return names;
}

struct ExperimentConfig {
  std::string experiment;
  int num_antennas = 3;
  std::vector<double> gamma_db;
  std::vector<double> q;
  std::vector<double> budgets;  ///< from `B` or `B_range`
  /// Magnitude codebook size; 0 means derive from the bit allocation.
  std::size_t mag_size = 0;
  std::vector<std::size_t> dir_sizes;
  std::size_t n_trials = 100;
  std::uint64_t seed = 1;
  std::string output;
  double outage_split = 0.5;
  int threads = 1;
  bool monte_carlo = false;
  /// When set, sdp-vs-bound appends a per-instance solver trace here.
  std::ostream* trace = nullptr;

  /// Key/value pairs in file order, echoed into CSV comments.
  std::vector<std::pair<std::string, std::string>> echo;

  std::vector<double> gammas_linear() const;
  /// Checks the fields each experiment needs. Throws ConfigError.
  void validate() const;
};

/// Raw key/value pairs. Throws ConfigError for malformed lines, unknown keys
/// and duplicates.
std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& is);

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

/// "a,b,c" -> doubles. Throws ConfigError.
std::vector<double> parse_list(const std::string& text, const std::string& key);
/// "start:stop:step" inclusive of stop. Throws ConfigError.
std::vector<double> parse_range(const std::string& text, const std::string& key);

}  // namespace fbq
