// SPDX-License-Identifier: Apache-2.0

#include "fbq/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "fbq/bit_allocation.hpp"
#include "fbq/power_control.hpp"
#include "fbq/product_quantizer.hpp"

#ifndef FBQ_VERSION
#define FBQ_VERSION "unknown"
#endif

namespace fbq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream identifiers for derive_seed.
constexpr std::uint64_t kStreamCodebook = 0x1000;
constexpr std::uint64_t kStreamTrial = 0x2000;

struct MeanStat {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : kNaN; }
  double stderr_() const {
    if (n < 2) return kNaN;
    const double m = mean();
    const double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return std::sqrt(std::max(0.0, var) / static_cast<double>(n));
  }
};

std::vector<double> theta0s_for(const ExperimentConfig& cfg) {
  std::vector<double> t;
  for (double q : cfg.q) t.push_back(outage_split(q, cfg.outage_split).theta0);
  return t;
}

std::int64_t as_int(std::size_t x) { return static_cast<std::int64_t>(x); }

}  // namespace

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw InvalidArgument("row width does not match schema");
  rows.push_back(std::move(row));
}

std::size_t ResultTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidArgument("no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double ResultTable::number(std::size_t row, const std::string& name) const {
  const Cell& c = rows.at(row).at(column(name));
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  throw InvalidArgument("column '" + name + "' is not numeric");
}

std::string library_version() { return FBQ_VERSION; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(std::ostream& os, const ResultTable& table, const ExperimentConfig& cfg) {
  os << "# fbq-sim " << library_version() << '\n';
  os << "# experiment = " << table.experiment << '\n';
  for (const auto& [key, value] : cfg.echo) {
    if (key == "experiment" || key == "seed" || key == "threads" || key == "output") continue;
    os << "# " << key << " = " << value << '\n';
  }
  os << "# seed = " << cfg.seed << '\n';
  if (cfg.monte_carlo) os << "# monte_carlo = true\n";
  for (const auto& n : table.notes) os << "# " << n << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << table.columns[i];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      std::visit(
          [&os](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              os << format_double(v);
            } else {
              os << v;
            }
          },
          row[i]);
    }
    os << '\n';
  }
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(workers, n); ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

PackingOptions packing_for(std::size_t size) {
  PackingOptions o;
  if (size <= 64) return o;
  if (size <= 256) {
    o.restarts = 2;
    o.iterations = 1000;
    return o;
  }
  o.restarts = 1;
  o.iterations = size <= 1024 ? 600 : 300;
  return o;
}

// ---------------------------------------------------------------------------

ResultTable run_sdp_vs_bound(const ExperimentConfig& cfg) {
  const int m = cfg.num_antennas;
  const auto gammas = cfg.gammas_linear();
  const auto theta0s = theta0s_for(cfg);
  const auto dist = chi_square_facts(m);
  std::vector<MagnitudeCodebook> mags;
  for (double q : cfg.q) {
    mags.push_back(build_uniform_db(16, outage_split(q, cfg.outage_split).q_dot, dist));
  }

  ResultTable t;
  t.experiment = "sdp-vs-bound";
  t.columns = {"dir_size",  "phi",         "sdp_mean",      "sdp_se",         "bound_mean",
               "bound_se",  "gap_mean",    "gap_se",        "bound_below_sdp", "cert_failures",
               "sdp_only",  "n_effective", "exclusion_rate", "flagged"};
  t.notes.push_back("perfect magnitudes (r = Y); averages over trials where both solvers are feasible");

  struct Trial {
    bool closed_ok = false, sdp_ok = false, cert_ok = true;
    double closed = 0.0, sdp = 0.0;
    std::string trace;
  };
  bool any_feasible = false;
  for (std::size_t j = 0; j < cfg.dir_sizes.size(); ++j) {
    const std::size_t n = cfg.dir_sizes[j];
    Rng cb_rng(derive_seed(cfg.seed, kStreamCodebook, n));
    const DirectionCodebook base = build_grassmannian(n, m, cb_rng, packing_for(n));
    const double phi = base.cap_opening();
    const std::vector<double> phis(static_cast<std::size_t>(m), phi);

    auto run_trial = [&](std::size_t i) {
      Rng rng(derive_seed(cfg.seed, kStreamTrial + j, i));
      std::vector<ProductCodebook> books;
      for (int k = 0; k < m; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        books.emplace_back(mags[ku], random_rotation(base, rng), theta0s[ku]);
      }
      const ChannelSet h = sample_channels(rng, m);
      QuantizeOptions qo;
      qo.perfect_magnitude = true;
      const QuantizedState state = quantize_all(h, books, qo);
      const RobustInstance in = RobustInstance::from_state(state, phis, gammas);
      Trial tr;
      const PowerAllocation closed = closed_form_robust(in);
      const RobustSolution sdp = solve_sdp(in);
      tr.closed_ok = closed.feasible();
      tr.sdp_ok = sdp.powers.feasible();
      tr.closed = closed.sum();
      tr.sdp = sdp.objective;
      if (cfg.trace) {
        std::ostringstream os;
        os << "instance dir_size " << n << " trial " << i << '\n';
        write_trace(os, in, sdp);
        os << "closed_form " << (closed.feasible() ? format_double(closed.sum()) : "infeasible")
           << '\n';
        tr.trace = os.str();
      }
      for (const PowerAllocation* p : {&closed, &sdp.powers}) {
        if (!p->feasible()) continue;
        const auto w = worst_case_sinr(in, p->powers, 10000, rng);
        for (int k = 0; k < m; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          if (in.active[ku] && w[ku].sampled < gammas[ku] * (1.0 - 1e-6)) tr.cert_ok = false;
        }
      }
      return tr;
    };

    // Deterministic batches until n_trials instances are feasible for both.
    std::vector<Trial> trials;
    std::size_t feasible = 0;
    const std::size_t max_attempts = 100 * cfg.n_trials;
    while (feasible < cfg.n_trials && trials.size() < max_attempts) {
      const std::size_t start = trials.size();
      const std::size_t batch = std::min(cfg.n_trials, max_attempts - start);
      trials.resize(start + batch);
      parallel_for(batch, cfg.threads, [&](std::size_t b) { trials[start + b] = run_trial(start + b); });
      for (std::size_t i = start; i < trials.size(); ++i) {
        feasible += trials[i].closed_ok && trials[i].sdp_ok ? 1 : 0;
      }
    }

    if (cfg.trace) {
      for (const Trial& tr : trials) *cfg.trace << tr.trace;
    }
    MeanStat sdp, bound, gap;
    std::size_t considered = 0, below = 0, cert_fail = 0, sdp_only = 0;
    for (const Trial& tr : trials) {
      if (sdp.n == cfg.n_trials) break;
      ++considered;
      if (!tr.cert_ok) ++cert_fail;
      if (tr.sdp_ok && !tr.closed_ok) ++sdp_only;
      if (!(tr.closed_ok && tr.sdp_ok)) continue;
      sdp.add(tr.sdp);
      bound.add(tr.closed);
      if (tr.sdp > 0.0) gap.add((tr.closed - tr.sdp) / tr.sdp);
      if (tr.closed < tr.sdp - 1e-6 * (1.0 + tr.sdp)) ++below;
    }
    any_feasible = any_feasible || sdp.n > 0;
    const double exclusion =
        considered ? 1.0 - static_cast<double>(sdp.n) / static_cast<double>(considered) : 1.0;
    t.add_row({as_int(n), phi, sdp.mean(), sdp.stderr_(), bound.mean(), bound.stderr_(),
               gap.mean(), gap.stderr_(), as_int(below), as_int(cert_fail), as_int(sdp_only),
               as_int(sdp.n), exclusion, std::int64_t{exclusion >= 0.5 ? 1 : 0}});
  }
  t.all_trials_infeasible = !any_feasible;
  return t;
}

ResultTable run_bit_alloc_compare(const ExperimentConfig& cfg) {
  const int m = cfg.num_antennas;
  const QosTargets targets = QosTargets::from_db(cfg.gamma_db, cfg.q);
  const auto dist = chi_square_facts(m);
  ResultTable t;
  t.experiment = "bit-alloc-compare";
  t.columns = {"B",           "user",         "closed_mag",    "closed_dir",  "closed_total",
               "closed_sum",  "rounded_mag",  "rounded_dir",   "numerical_mag", "numerical_dir",
               "max_deviation", "status"};
  for (double b : cfg.budgets) {
    const auto numerical = allocate_bits_numerical(static_cast<int>(b), targets, dist, m);
    BitAllocation closed, rounded;
    bool ok = true;
    try {
      closed = allocate_bits_closed_form(b, targets, m);
      rounded = round_allocation(closed, Rounding::Nearest);
    } catch (const DomainError&) {
      ok = false;
    }
    for (int k = 0; k < m; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const double nm = numerical.magnitude_bits[ku], nd = numerical.direction_bits[ku];
      if (!ok) {
        t.add_row({b, std::int64_t{k + 1}, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, nm, nd, kNaN,
                   std::string("below-regime")});
        continue;
      }
      const double dev = std::max(std::abs(rounded.magnitude_bits[ku] - nm),
                                  std::abs(rounded.direction_bits[ku] - nd));
      t.add_row({b, std::int64_t{k + 1}, closed.magnitude_bits[ku], closed.direction_bits[ku],
                 closed.total_bits[ku], closed.allocated(), rounded.magnitude_bits[ku],
                 rounded.direction_bits[ku], nm, nd, dev, std::string("ok")});
    }
  }
  return t;
}

ResultTable run_bit_shares(const ExperimentConfig& cfg) {
  const int m = cfg.num_antennas;
  const QosTargets targets = QosTargets::from_db(cfg.gamma_db, cfg.q);
  ResultTable t;
  t.experiment = "bit-shares";
  t.columns = {"B"};
  for (int k = 1; k <= m; ++k) t.columns.push_back("B_" + std::to_string(k));
  for (int k = 1; k <= m; ++k) t.columns.push_back("B_" + std::to_string(k) + "_continuous");
  t.columns.push_back("discrepancy");
  t.columns.push_back("status");
  for (double b : cfg.budgets) {
    std::vector<Cell> row{b};
    try {
      const auto cont = allocate_bits_closed_form(b, targets, m);
      const auto rounded = round_allocation(cont, Rounding::Nearest);
      for (double x : rounded.total_bits) row.emplace_back(x);
      for (double x : cont.total_bits) row.emplace_back(x);
      row.emplace_back(rounded.discrepancy);
      row.emplace_back(std::string("ok"));
    } catch (const DomainError&) {
      for (int i = 0; i < 2 * m + 1; ++i) row.emplace_back(kNaN);
      row.emplace_back(std::string("below-regime"));
    }
    t.add_row(std::move(row));
  }
  return t;
}

namespace {

// Measured relative excess power of the closed-form robust solution over
// perfect-CSI zero forcing on the same channels.
struct McDistortion {
  double value = kNaN, se = kNaN;
  std::size_t n_effective = 0;
  double exclusion = kNaN;
};

McDistortion measure_distortion(const ExperimentConfig& cfg, const BitAllocation& bits,
                                std::size_t b_index) {
  const int m = cfg.num_antennas;
  const auto dist = chi_square_facts(m);
  const auto gammas = cfg.gammas_linear();
  const auto theta0s = theta0s_for(cfg);
  std::vector<MagnitudeCodebook> mags;
  std::vector<DirectionCodebook> dirs;
  std::vector<double> phis;
  for (int k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double nd = std::exp2(bits.direction_bits[ku]);
    const double nm = std::exp2(bits.magnitude_bits[ku]);
    if (nd > 1024.0 || nm > 1048576.0) return {};
    mags.push_back(build_uniform_db(static_cast<std::size_t>(nm),
                                    outage_split(cfg.q[ku], cfg.outage_split).q_dot, dist));
    Rng cb_rng(derive_seed(cfg.seed, kStreamCodebook + 1 + b_index, ku));
    const auto n = static_cast<std::size_t>(nd);
    dirs.push_back(build_grassmannian(n, m, cb_rng, packing_for(n)));
    phis.push_back(dirs.back().cap_opening());
  }
  struct Trial {
    bool ok = false;
    double mu = 0.0, csi = 0.0;
  };
  std::vector<Trial> trials(cfg.n_trials);
  parallel_for(cfg.n_trials, cfg.threads, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, kStreamTrial + 0x100 + b_index, i));
    std::vector<ProductCodebook> books;
    for (int k = 0; k < m; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      books.emplace_back(mags[ku], random_rotation(dirs[ku], rng), theta0s[ku]);
    }
    const ChannelSet h = sample_channels(rng, m);
    const auto state = quantize_all(h, books);
    const auto p = closed_form_robust(state, phis, gammas);
    if (!p.feasible()) return;
    trials[i] = {true, p.sum(), csi_zf_power(h, gammas, theta0s).sum()};
  });
  MeanStat x, y;
  double sxy = 0.0;
  for (const auto& tr : trials) {
    if (!tr.ok) continue;
    x.add(tr.mu);
    y.add(tr.csi);
    sxy += tr.mu * tr.csi;
  }
  McDistortion out;
  out.n_effective = x.n;
  out.exclusion = 1.0 - static_cast<double>(x.n) / static_cast<double>(cfg.n_trials);
  if (x.n < 2) return out;
  const double n = static_cast<double>(x.n);
  const double r = x.mean() / y.mean();
  out.value = r - 1.0;
  const double vx = (x.sum_sq - n * x.mean() * x.mean()) / (n - 1.0);
  const double vy = (y.sum_sq - n * y.mean() * y.mean()) / (n - 1.0);
  const double cxy = (sxy - n * x.mean() * y.mean()) / (n - 1.0);
  out.se = std::sqrt(std::max(0.0, vx - 2.0 * r * cxy + r * r * vy) / n) / y.mean();
  return out;
}

}  // namespace

ResultTable run_distortion(const ExperimentConfig& cfg) {
  const int m = cfg.num_antennas;
  const QosTargets targets = QosTargets::from_db(cfg.gamma_db, cfg.q);
  const auto dist = chi_square_facts(m);
  double csi = 0.0;
  for (std::size_t k = 0; k < targets.num_users(); ++k) {
    csi += targets.gammas[k] / (0.25 * kPi * targets.qs[k]);
  }
  ResultTable t;
  t.experiment = "distortion";
  t.columns = {"B", "D_analytic", "D_analytic_continuous", "D_numerical", "D_bound"};
  if (cfg.monte_carlo) {
    for (const char* c : {"D_mc", "D_mc_se", "n_effective", "exclusion_rate", "flagged"}) {
      t.columns.emplace_back(c);
    }
  }
  t.notes.push_back("D = (E[P] - P_CSI) / P_CSI with E[P] from the average power bound");
  bool any_feasible = !cfg.monte_carlo;
  for (std::size_t i = 0; i < cfg.budgets.size(); ++i) {
    const double b = cfg.budgets[i];
    double d_analytic = kNaN, d_continuous = kNaN;
    BitAllocation closed;
    bool closed_ok = true;
    try {
      const auto continuous = allocate_bits_closed_form(b, targets, m);
      d_continuous = allocation_objective(continuous, targets, m, dist) / csi - 1.0;
      closed = round_allocation(continuous, Rounding::NearestWithRepair);
      d_analytic = allocation_objective(closed, targets, m, dist) / csi - 1.0;
    } catch (const DomainError&) {
      closed_ok = false;
    }
    const auto numerical = allocate_bits_numerical(static_cast<int>(b), targets, dist, m);
    const double d_numerical = allocation_objective(numerical, targets, m, dist) / csi - 1.0;
    std::vector<Cell> row{b, d_analytic, d_continuous, d_numerical,
                          distortion_bound(b, m, targets.q_geomean())};
    if (cfg.monte_carlo) {
      McDistortion mc;
      if (closed_ok) mc = measure_distortion(cfg, closed, i);
      any_feasible = any_feasible || mc.n_effective > 0;
      row.emplace_back(mc.value);
      row.emplace_back(mc.se);
      row.emplace_back(as_int(mc.n_effective));
      row.emplace_back(mc.exclusion);
      row.emplace_back(std::int64_t{!(mc.exclusion < 0.5) ? 1 : 0});
    }
    t.add_row(std::move(row));
  }
  if (cfg.monte_carlo) {
    t.notes.push_back("D_mc measured only where direction codebooks have <= 1024 codewords");
    t.all_trials_infeasible = !any_feasible;
  }
  return t;
}

ResultTable run_outage_audit(const ExperimentConfig& cfg) {
  const int m = cfg.num_antennas;
  const auto dist = chi_square_facts(m);
  std::vector<ProductCodebook> base;
  std::vector<OutageSplit> splits;
  for (int k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    splits.push_back(outage_split(cfg.q[ku], cfg.outage_split));
    const std::size_t nd = cfg.dir_sizes.size() == 1 ? cfg.dir_sizes[0] : cfg.dir_sizes[ku];
    Rng cb_rng(derive_seed(cfg.seed, kStreamCodebook, ku));
    base.emplace_back(build_uniform_db(cfg.mag_size, splits.back().q_dot, dist),
                      build_grassmannian(nd, m, cb_rng, packing_for(nd)), splits.back().theta0);
  }
  // Bit 0: total, bit 1: magnitude, bit 2: direction outage, per user.
  std::vector<std::uint8_t> flags(cfg.n_trials * static_cast<std::size_t>(m), 0);
  parallel_for(cfg.n_trials, cfg.threads, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, kStreamTrial, i));
    std::vector<ProductCodebook> books;
    for (const auto& b : base) {
      books.emplace_back(b.magnitude(), random_rotation(b.direction(), rng), b.theta0());
    }
    const auto state = quantize_all(sample_channels(rng, m), books);
    for (std::size_t k = 0; k < state.users.size(); ++k) {
      const auto& u = state.users[k];
      flags[i * static_cast<std::size_t>(m) + k] = static_cast<std::uint8_t>(
          (u.active ? 0 : 1) | (u.magnitude_outage ? 2 : 0) | (u.direction_outage ? 4 : 0));
    }
  });

  ResultTable t;
  t.experiment = "outage-audit";
  t.columns = {"user",          "q",            "total",       "total_se",
               "magnitude",     "magnitude_se", "direction",   "direction_se",
               "magnitude_target", "direction_nominal", "direction_exact", "total_exact",
               "within_3se",    "n_trials"};
  t.notes.push_back("direction_nominal assumes theta uniform on [0, pi/2]; direction_exact uses the law of sin(theta)");
  const double n = static_cast<double>(cfg.n_trials);
  for (int k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    std::size_t tot = 0, mag = 0, dir = 0;
    for (std::size_t i = 0; i < cfg.n_trials; ++i) {
      const auto f = flags[i * static_cast<std::size_t>(m) + ku];
      tot += f & 1;
      mag += (f >> 1) & 1;
      dir += (f >> 2) & 1;
    }
    auto freq = [n](std::size_t c) { return static_cast<double>(c) / n; };
    auto se = [n](double p) { return std::sqrt(p * (1.0 - p) / n); };
    const double pt = freq(tot), pm = freq(mag), pd = freq(dir);
    const double q = cfg.q[ku];
    const double dir_exact = direction_outage_probability(m, splits[ku].theta0);
    // Magnitude and direction outage are independent events.
    const double total_exact = 1.0 - (1.0 - splits[ku].q_dot) * (1.0 - dir_exact);
    t.add_row({std::int64_t{k + 1}, q, pt, se(pt), pm, se(pm), pd, se(pd), splits[ku].q_dot,
               splits[ku].q_ddot, dir_exact, total_exact,
               std::int64_t{pt <= q + 3.0 * se(pt) ? 1 : 0}, as_int(cfg.n_trials)});
  }
  return t;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment == "sdp-vs-bound") return run_sdp_vs_bound(cfg);
  if (cfg.experiment == "bit-alloc-compare") return run_bit_alloc_compare(cfg);
  if (cfg.experiment == "bit-shares") return run_bit_shares(cfg);
  if (cfg.experiment == "distortion") return run_distortion(cfg);
  return run_outage_audit(cfg);
}

}  // namespace fbq
