// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fbq/sim_harness.hpp"

namespace fbq {
namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

std::string csv(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_csv(os, run_experiment(cfg), cfg);
  return os.str();
}

TEST(Config, ParsesKeys) {
  const auto cfg = parse(
      "# comment\n"
      "experiment = bit-shares\n"
      "M = 3\n"
      "gamma_db = 2, 5, 8\n"
      "q = 0.1,0.1,0.1\n"
      "B_range = 60:90:10\n"
      "seed = 9\n");
  EXPECT_EQ(cfg.experiment, "bit-shares");
  EXPECT_EQ(cfg.num_antennas, 3);
  EXPECT_EQ(cfg.budgets, (std::vector<double>{60, 70, 80, 90}));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_NEAR(cfg.gammas_linear()[2], std::pow(10.0, 0.8), 1e-12);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.echo.size(), 6u);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse("M = 3\nM = 4\n"), ConfigError);
  EXPECT_THROW(parse("M 3\n"), ConfigError);
  EXPECT_THROW(parse("B = 10\nB_range = 1:2:1\n"), ConfigError);
  EXPECT_THROW(parse("gamma_db = 1,x\n"), ConfigError);
  EXPECT_THROW(parse("dir_sizes = 1.5\n"), ConfigError);
  auto cfg = parse("experiment = distortion\nM = 3\ngamma_db = 1,2,3\nq = 0.1,0.1,0.1\n");
  EXPECT_THROW(cfg.validate(), ConfigError);  // no budget
  cfg = parse("experiment = outage-audit\nM = 3\ngamma_db = 1,2,3\nq = 0.1,0.1,0.1\n"
              "mag_size = 8\ndir_sizes = 16\nn_trials = 100\n");
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = parse("experiment = sdp-vs-bound\nM = 2\ngamma_db = 1,2\nq = 0.1,0.1\ndir_sizes = 8\n");
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, Range) {
  EXPECT_EQ(parse_range("1:2:0.5", "B_range"), (std::vector<double>{1, 1.5, 2}));
  EXPECT_EQ(parse_range("10:25:10", "B_range"), (std::vector<double>{10, 20}));
  EXPECT_THROW(parse_range("3:1:1", "B_range"), ConfigError);
  EXPECT_THROW(parse_range("1:3", "B_range"), ConfigError);
}

TEST(Csv, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(3.0), "3");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST(Csv, Layout) {
  auto cfg = parse("M = 3\ngamma_db = 2,5,8\nq = 0.1,0.1,0.1\nB = 90\nseed = 4\n");
  cfg.experiment = "bit-shares";
  const std::string out = csv(cfg);
  std::istringstream is(out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines[0].rfind("# fbq-sim ", 0), 0u);
  std::size_t i = 0;
  while (i < lines.size() && lines[i][0] == '#') ++i;
  ASSERT_LT(i + 1, lines.size());
  EXPECT_EQ(lines[i], "B,B_1,B_2,B_3,B_1_continuous,B_2_continuous,B_3_continuous,discrepancy,status");
  EXPECT_NE(out.find("# seed = 4"), std::string::npos);
  EXPECT_NE(out.find("# gamma_db = 2,5,8"), std::string::npos);
}

TEST(Table, Accessors) {
  ResultTable t;
  t.columns = {"a", "b"};
  t.add_row({std::int64_t{3}, std::string("x")});
  EXPECT_EQ(t.number(0, "a"), 3.0);
  EXPECT_THROW(t.number(0, "b"), InvalidArgument);
  EXPECT_THROW(t.column("c"), InvalidArgument);
  EXPECT_THROW(t.add_row({1.0}), InvalidArgument);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerError) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 57) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Seeds, DerivationIsStable) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
}

TEST(BitShares, OrderingAndConstantGaps) {
  auto cfg = parse("M = 3\ngamma_db = 2,5,8\nq = 0.1,0.1,0.1\nB_range = 60:200:10\n");
  cfg.experiment = "bit-shares";
  const auto t = run_experiment(cfg);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double b1 = t.number(r, "B_1_continuous"), b2 = t.number(r, "B_2_continuous"),
                 b3 = t.number(r, "B_3_continuous");
    EXPECT_GT(b3, b2);
    EXPECT_GT(b2, b1);
    EXPECT_NEAR(b3 - b1, 3 * std::log2(std::pow(10.0, 0.6)), 1e-9);
    EXPECT_GE(t.number(r, "B_3"), t.number(r, "B_2"));
    EXPECT_GE(t.number(r, "B_2"), t.number(r, "B_1"));
  }
}

TEST(BitShares, HomogeneousControl) {
  auto cfg = parse("M = 3\ngamma_db = 5,5,5\nq = 0.1,0.1,0.1\nB_range = 60:120:30\n");
  cfg.experiment = "bit-shares";
  const auto t = run_experiment(cfg);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EXPECT_NEAR(t.number(r, "B_1_continuous"), t.number(r, "B") / 3, 1e-9);
    EXPECT_EQ(t.number(r, "B_1"), t.number(r, "B_3"));
  }
}

TEST(BitAllocCompare, RowsAndOrdering) {
  auto cfg = parse("M = 3\ngamma_db = 15,10,10\nq = 0.02,0.05,0.05\nB_range = 40:100:20\n");
  cfg.experiment = "bit-alloc-compare";
  const auto t = run_experiment(cfg);
  ASSERT_EQ(t.rows.size(), 12u);
  for (std::size_t r = 0; r < t.rows.size(); r += 3) {
    if (std::get<std::string>(t.rows[r].back()) != "ok") continue;
    EXPECT_NEAR(t.number(r, "closed_sum"), t.number(r, "B"), 1e-9);
    EXPECT_GT(t.number(r, "closed_dir"), t.number(r + 1, "closed_dir"));
    EXPECT_GT(t.number(r, "closed_dir"), t.number(r + 2, "closed_dir"));
  }
  EXPECT_EQ(std::get<std::string>(t.rows[0].back()), "below-regime");
}

TEST(Distortion, NumericalNeverAboveAnalytic) {
  auto cfg = parse("M = 3\ngamma_db = 2,5,8\nq = 0.1,0.1,0.1\nB_range = 60:200:20\n");
  cfg.experiment = "distortion";
  const auto t = run_experiment(cfg);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EXPECT_LE(t.number(r, "D_numerical"), t.number(r, "D_analytic") + 1e-9);
    EXPECT_GT(t.number(r, "D_bound"), 0.0);
  }
}

TEST(Distortion, MonteCarloColumns) {
  // Small targets keep every direction codebook under the measured-size cap.
  auto cfg = parse("M = 3\ngamma_db = 0,0,0\nq = 0.5,0.5,0.5\nB = 27\nn_trials = 200\n");
  cfg.experiment = "distortion";
  cfg.monte_carlo = true;
  const auto t = run_experiment(cfg);
  EXPECT_GT(t.number(0, "n_effective"), 0.0);
  EXPECT_TRUE(std::isfinite(t.number(0, "D_mc")));
  EXPECT_TRUE(std::isfinite(t.number(0, "D_mc_se")));
}

TEST(SdpVsBound, SmallRunIsConsistent) {
  auto cfg = parse("M = 3\ngamma_db = 3,6,6\nq = 0.1,0.1,0.1\ndir_sizes = 128\nn_trials = 10\nseed = 2\n");
  cfg.experiment = "sdp-vs-bound";
  const auto t = run_experiment(cfg);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.number(0, "bound_below_sdp"), 0.0);
  EXPECT_EQ(t.number(0, "cert_failures"), 0.0);
  EXPECT_EQ(t.number(0, "n_effective"), 10.0);
  EXPECT_GE(t.number(0, "bound_mean"), t.number(0, "sdp_mean"));
}

TEST(OutageAudit, MagnitudeComponentOnTarget) {
  auto cfg = parse("M = 3\ngamma_db = 5,5,5\nq = 0.02,0.05,0.1\nmag_size = 16\ndir_sizes = 64\n"
                   "n_trials = 20000\n");
  cfg.experiment = "outage-audit";
  const auto t = run_experiment(cfg);
  ASSERT_EQ(t.rows.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(t.number(r, "magnitude"), t.number(r, "magnitude_target"),
                3 * t.number(r, "magnitude_se") + 1e-12);
    EXPECT_NEAR(t.number(r, "direction"), t.number(r, "direction_exact"),
                3 * t.number(r, "direction_se") + 1e-12);
  }
}

TEST(Determinism, SameSeedSameBytesAnyThreads) {
  const std::string base =
      "M = 3\ngamma_db = 3,6,6\nq = 0.1,0.1,0.1\ndir_sizes = 16,32\nn_trials = 8\nseed = 5\n";
  auto a = parse(base);
  a.experiment = "sdp-vs-bound";
  auto b = a;
  b.threads = 3;
  EXPECT_EQ(csv(a), csv(a));
  EXPECT_EQ(csv(a), csv(b));
  auto c = a;
  c.seed = 6;
  EXPECT_NE(csv(a), csv(c));
}

TEST(Experiment, UnknownName) {
  auto cfg = parse("M = 3\ngamma_db = 1,2,3\nq = 0.1,0.1,0.1\nB = 50\n");
  cfg.experiment = "nope";
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

}  // namespace
}  // namespace fbq
