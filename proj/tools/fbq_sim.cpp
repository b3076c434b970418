// SPDX-License-Identifier: Apache-2.0
//
// fbq-sim: run experiments, print bit allocations, check codebook sizes and
// export codebooks.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "fbq/bit_allocation.hpp"
#include "fbq/power_control.hpp"
#include "fbq/sim_harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

int cmd_run(const std::string& experiment, const std::string& config_path,
            const std::optional<std::uint64_t>& seed, const std::string& out_path,
            int threads, bool monte_carlo, const std::string& trace_path) {
  fbq::ExperimentConfig cfg = fbq::load_config(config_path);
  if (!cfg.experiment.empty() && cfg.experiment != experiment) {
    throw fbq::ConfigError("config names experiment '" + cfg.experiment +
                           "' but '" + experiment + "' was requested");
  }
  cfg.experiment = experiment;
  if (seed) cfg.seed = *seed;
  if (threads > 0) cfg.threads = threads;
  cfg.monte_carlo = monte_carlo;
  if (!out_path.empty()) cfg.output = out_path;

  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) throw fbq::ConfigError("cannot open trace file '" + trace_path + "'");
    cfg.trace = &trace;
  }
  const fbq::ResultTable table = fbq::run_experiment(cfg);
  if (cfg.output.empty() || cfg.output == "-") {
    fbq::write_csv(std::cout, table, cfg);
  } else {
    std::ofstream out(cfg.output);
    if (!out) throw fbq::ConfigError("cannot open output file '" + cfg.output + "'");
    fbq::write_csv(out, table, cfg);
  }
  if (table.all_trials_infeasible) {
    std::cerr << "fbq-sim: every trial was infeasible\n";
    return kExitInfeasible;
  }
  return 0;
}

fbq::Rounding parse_rounding(const std::string& s) {
  if (s == "none") return fbq::Rounding::None;
  if (s == "nearest") return fbq::Rounding::Nearest;
  return fbq::Rounding::NearestWithRepair;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback bit allocation and robust power control experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fbq::library_version());

  // run
  auto* run = app.add_subcommand("run", "Run an experiment and write CSV");
  std::string experiment, config_path, out_path, trace_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool monte_carlo = false;
  run->add_option("experiment", experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember(fbq::experiment_names()));
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Master seed (overrides config)");
  run->add_option("--out", out_path, "Output CSV path ('-' for stdout)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--monte-carlo", monte_carlo, "Measured distortion alongside the bound");
  run->add_option("--trace", trace_path, "Per-instance solver trace (sdp-vs-bound)");

  // allocate
  auto* alloc = app.add_subcommand("allocate", "Print a bit allocation as CSV");
  int m = 3;
  double budget = 0.0;
  std::vector<double> gamma_db, qs;
  std::string rounding = "none";
  bool numerical = false;
  alloc->add_option("--M", m, "Antennas (= users)")->required()->check(CLI::Range(2, 8));
  alloc->add_option("--B", budget, "Total feedback bits")->required();
  alloc->add_option("--gamma-db", gamma_db, "Target SINRs in dB")->required()->delimiter(',');
  alloc->add_option("--q", qs, "Outage probabilities")->required()->delimiter(',');
  alloc->add_option("--rounding", rounding, "none | nearest | repair")
      ->check(CLI::IsMember({"none", "nearest", "repair"}));
  alloc->add_flag("--numerical", numerical, "Exact integer minimisation instead of closed form");

  // check-mqcs
  auto* mqcs = app.add_subcommand("check-mqcs", "Direction codebook size needed for feasibility");
  int mq_m = 3;
  std::vector<double> mq_gamma_db, mq_q;
  double mq_split = 0.5;
  std::string codebook_path;
  mqcs->add_option("--M", mq_m, "Antennas")->required()->check(CLI::Range(2, 8));
  mqcs->add_option("--gamma-db", mq_gamma_db, "Target SINRs in dB")->required()->delimiter(',');
  mqcs->add_option("--q", mq_q, "Outage probabilities")->required()->delimiter(',');
  mqcs->add_option("--outage-split", mq_split, "Magnitude share of the outage budget");
  mqcs->add_option("--codebook", codebook_path, "Direction codebook file to check");

  // codebook
  auto* cb = app.add_subcommand("codebook", "Build and write a codebook");
  std::string kind;
  int cb_m = 3;
  std::size_t cb_size = 16;
  double cb_qdot = 0.05;
  std::uint64_t cb_seed = 1;
  std::string cb_out;
  cb->add_option("kind", kind, "magnitude | direction")
      ->required()
      ->check(CLI::IsMember({"magnitude", "direction"}));
  cb->add_option("--M", cb_m, "Antennas")->check(CLI::Range(2, 8));
  cb->add_option("--size", cb_size, "Codebook size")->check(CLI::Range(2, 1 << 20));
  cb->add_option("--q-dot", cb_qdot, "Magnitude outage probability");
  cb->add_option("--seed", cb_seed, "Packing seed");
  cb->add_option("--out", cb_out, "Output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      return cmd_run(experiment, config_path, seed, out_path, threads, monte_carlo, trace_path);
    }
    if (*alloc) {
      const auto targets = fbq::QosTargets::from_db(gamma_db, qs);
      fbq::BitAllocation a;
      if (numerical) {
        if (budget != std::floor(budget)) throw fbq::ConfigError("--numerical needs integer --B");
        a = fbq::allocate_bits_numerical(static_cast<int>(budget), targets,
                                         fbq::chi_square_facts(m), m);
      } else {
        a = fbq::allocate_bits_closed_form(budget, targets, m, parse_rounding(rounding));
      }
      std::cout << "# fbq-sim " << fbq::library_version() << '\n';
      if (a.discrepancy != 0.0) std::cout << "# discrepancy = " << a.discrepancy << '\n';
      std::cout << "user,B_dot,B_ddot,B_k\n";
      for (std::size_t k = 0; k < a.total_bits.size(); ++k) {
        std::cout << k + 1 << ',' << fbq::format_double(a.magnitude_bits[k]) << ','
                  << fbq::format_double(a.direction_bits[k]) << ','
                  << fbq::format_double(a.total_bits[k]) << '\n';
      }
      return 0;
    }
    if (*mqcs) {
      if (mq_gamma_db.size() != mq_q.size()) {
        throw fbq::ConfigError("--gamma-db and --q need the same length");
      }
      std::unique_ptr<fbq::DirectionCodebook> book;
      if (!codebook_path.empty()) {
        std::ifstream in(codebook_path);
        if (!in) throw fbq::ConfigError("cannot open codebook '" + codebook_path + "'");
        book = std::make_unique<fbq::DirectionCodebook>(fbq::read_codebook(in));
        if (book->dim() != mq_m) throw fbq::ConfigError("codebook dimension differs from --M");
      }
      std::cout << "user,gamma_db,q,theta0,tan_phi_limit,min_dir_size";
      if (book) std::cout << ",codebook_size,tan_phi,satisfied";
      std::cout << '\n';
      int status = 0;
      for (std::size_t k = 0; k < mq_q.size(); ++k) {
        const double g = fbq::db_to_linear(mq_gamma_db[k]);
        const double theta0 = fbq::outage_split(mq_q[k], mq_split).theta0;
        const double limit = fbq::mqcs_tan_phi_limit(g, theta0, mq_m);
        const auto need = fbq::mqcs_min_dir_size(g, theta0, mq_m);
        std::cout << k + 1 << ',' << fbq::format_double(mq_gamma_db[k]) << ','
                  << fbq::format_double(mq_q[k]) << ',' << fbq::format_double(theta0) << ','
                  << fbq::format_double(limit) << ',' << need;
        if (book) {
          const double tan_phi = std::tan(book->cap_opening());
          const bool ok = tan_phi < limit;
          std::cout << ',' << book->size() << ',' << fbq::format_double(tan_phi) << ','
                    << (ok ? 1 : 0);
          if (!ok) status = 1;
        }
        std::cout << '\n';
      }
      return status;
    }
    if (*cb) {
      std::ofstream file;
      if (!cb_out.empty()) {
        file.open(cb_out);
        if (!file) throw fbq::ConfigError("cannot open '" + cb_out + "'");
      }
      std::ostream& os = cb_out.empty() ? std::cout : file;
      if (kind == "magnitude") {
        fbq::write_levels(os, fbq::build_uniform_db(cb_size, cb_qdot, fbq::chi_square_facts(cb_m)));
      } else {
        fbq::Rng rng(cb_seed);
        fbq::write_codebook(os, fbq::build_grassmannian(cb_size, cb_m, rng,
                                                        fbq::packing_for(cb_size)));
      }
      return 0;
    }
  } catch (const fbq::InvalidArgument& e) {
    std::cerr << "fbq-sim: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "fbq-sim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
