// SPDX-License-Identifier: Apache-2.0
//
// Seeded Monte Carlo experiments producing CSV tables.
//
// Every trial draws from its own generator seeded by (master seed, stream,
// trial index), and results are reduced in trial order, so the output does
// not depend on the number of worker threads.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "fbq/config.hpp"
#include "fbq/direction_codebook.hpp"

namespace fbq {

using Cell = std::variant<std::int64_t, double, std::string>;

struct ResultTable {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;  ///< written as '#' lines
  bool all_trials_infeasible = false;

  void add_row(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;
  /// Numeric value of a cell (int or double). Throws for strings.
  double number(std::size_t row, const std::string& name) const;
};

std::string library_version();

/// %.17g, with "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double x);

void write_csv(std::ostream& os, const ResultTable& table, const ExperimentConfig& cfg);

/// Runs fn(i) for i in [0, n) on `threads` workers. The first exception
/// thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Packing effort scaled down for large codebooks so that construction time
/// stays in seconds.
PackingOptions packing_for(std::size_t size);

ResultTable run_sdp_vs_bound(const ExperimentConfig& cfg);
ResultTable run_bit_alloc_compare(const ExperimentConfig& cfg);
ResultTable run_bit_shares(const ExperimentConfig& cfg);
ResultTable run_distortion(const ExperimentConfig& cfg);
ResultTable run_outage_audit(const ExperimentConfig& cfg);

/// Validates `cfg` and dispatches on cfg.experiment.
ResultTable run_experiment(const ExperimentConfig& cfg);

}  // namespace fbq
