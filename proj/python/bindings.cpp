// SPDX-License-Identifier: Apache-2.0

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fbq/bit_allocation.hpp"
#include "fbq/power_control.hpp"
#include "fbq/sim_harness.hpp"

namespace py = pybind11;

namespace {

fbq::ExperimentConfig make_config(const std::string& experiment, const std::string& text,
                                  std::optional<std::uint64_t> seed, int threads,
                                  bool monte_carlo) {
  std::istringstream is(text);
  fbq::ExperimentConfig cfg = fbq::parse_config(is);
  if (!cfg.experiment.empty() && cfg.experiment != experiment) {
    throw fbq::ConfigError("config names experiment '" + cfg.experiment + "'");
  }
  cfg.experiment = experiment;
  if (seed) cfg.seed = *seed;
  cfg.threads = threads;
  cfg.monte_carlo = monte_carlo;
  return cfg;
}

py::dict allocation_dict(const fbq::BitAllocation& a) {
  py::dict d;
  d["magnitude_bits"] = a.magnitude_bits;
  d["direction_bits"] = a.direction_bits;
  d["total_bits"] = a.total_bits;
  d["discrepancy"] = a.discrepancy;
  return d;
}

fbq::Rounding rounding_from(const std::string& s) {
  if (s == "none") return fbq::Rounding::None;
  if (s == "nearest") return fbq::Rounding::Nearest;
  if (s == "repair") return fbq::Rounding::NearestWithRepair;
  throw fbq::InvalidArgument("rounding must be none, nearest or repair");
}

}  // namespace

PYBIND11_MODULE(_fbq, m) {
  m.doc() = "Limited-feedback product quantization and robust power control";
  m.attr("__version__") = fbq::library_version();

  py::register_exception<fbq::InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<fbq::DomainError>(m, "DomainError", PyExc_ArithmeticError);

  py::class_<fbq::MagnitudeDistribution>(m, "MagnitudeDistribution")
      .def_property_readonly("degrees_of_freedom", &fbq::MagnitudeDistribution::degrees_of_freedom)
      .def("cdf", &fbq::MagnitudeDistribution::cdf)
      .def("pdf", &fbq::MagnitudeDistribution::pdf)
      .def("inverse_cdf", &fbq::MagnitudeDistribution::inverse_cdf)
      .def_property_readonly("rho", &fbq::MagnitudeDistribution::rho)
      .def_property_readonly("eta", &fbq::MagnitudeDistribution::eta)
      .def_property_readonly("omega", &fbq::MagnitudeDistribution::omega);
  m.def("chi_square_facts", &fbq::chi_square_facts, py::arg("num_antennas"));

  py::class_<fbq::MagnitudeCodebook>(m, "MagnitudeCodebook")
      .def_property_readonly("levels", &fbq::MagnitudeCodebook::levels)
      .def_property_readonly("zeta", &fbq::MagnitudeCodebook::zeta)
      .def("__len__", &fbq::MagnitudeCodebook::size);
  m.def("build_uniform_db", &fbq::build_uniform_db, py::arg("size"), py::arg("q_dot"),
        py::arg("dist"));
  m.def("expected_inverse_quantized", &fbq::expected_inverse_quantized);
  m.def("expected_inverse_bound", &fbq::expected_inverse_bound);

  py::class_<fbq::DirectionCodebook>(m, "DirectionCodebook")
      .def_property_readonly("codewords", &fbq::DirectionCodebook::codewords)
      .def_property_readonly("min_chordal_distance", &fbq::DirectionCodebook::min_chordal_distance)
      .def_property_readonly("cap_opening", &fbq::DirectionCodebook::cap_opening)
      .def("__len__", &fbq::DirectionCodebook::size);
  m.def(
      "build_grassmannian",
      [](std::size_t size, int num_antennas, std::uint64_t seed) {
        fbq::Rng rng(seed);
        return fbq::build_grassmannian(size, num_antennas, rng, fbq::packing_for(size));
      },
      py::arg("size"), py::arg("num_antennas"), py::arg("seed") = 1);
  m.def("lambda_m", &fbq::lambda_m);

  m.def("outage_theta0", [](double q) { return fbq::outage_split(q).theta0; }, py::arg("q"));
  m.def(
      "csi_power_formula",
      [](int m_, const std::vector<double>& g, const std::vector<double>& t) {
        return fbq::csi_power_formula(m_, g, t);
      },
      py::arg("num_antennas"), py::arg("gammas"), py::arg("theta0s"));
  m.def(
      "csi_power_exact",
      [](int m_, const std::vector<double>& g, const std::vector<double>& t) {
        return fbq::csi_power_exact(m_, g, t);
      },
      py::arg("num_antennas"), py::arg("gammas"), py::arg("theta0s"));
  m.def(
      "closed_form_robust",
      [](const std::vector<double>& r, const std::vector<double>& theta,
         const std::vector<double>& phi, const std::vector<double>& gamma) -> py::object {
        fbq::RobustInstance in;
        in.num_antennas = static_cast<int>(r.size());
        in.active.assign(r.size(), true);
        in.r = r;
        in.theta = theta;
        in.phi = phi;
        in.gamma = gamma;
        if (theta.size() != r.size() || phi.size() != r.size() || gamma.size() != r.size()) {
          throw fbq::InvalidArgument("r, theta, phi and gamma need the same length");
        }
        const auto p = fbq::closed_form_robust(in);
        if (!p.feasible()) return py::none();
        return py::cast(p.powers);
      },
      py::arg("r"), py::arg("theta"), py::arg("phi"), py::arg("gamma"),
      "Robust powers for all-active users, or None when infeasible.");
  m.def("mqcs_tan_phi_limit", &fbq::mqcs_tan_phi_limit);
  m.def("mqcs_min_dir_size", &fbq::mqcs_min_dir_size);

  m.def(
      "allocate_bits",
      [](double budget, const std::vector<double>& gamma_db, const std::vector<double>& q,
         int num_antennas, const std::string& rounding) {
        return allocation_dict(fbq::allocate_bits_closed_form(
            budget, fbq::QosTargets::from_db(gamma_db, q), num_antennas, rounding_from(rounding)));
      },
      py::arg("budget"), py::arg("gamma_db"), py::arg("q"), py::arg("num_antennas"),
      py::arg("rounding") = "none");
  m.def(
      "allocate_bits_numerical",
      [](int budget, const std::vector<double>& gamma_db, const std::vector<double>& q,
         int num_antennas) {
        return allocation_dict(fbq::allocate_bits_numerical(
            budget, fbq::QosTargets::from_db(gamma_db, q), fbq::chi_square_facts(num_antennas),
            num_antennas));
      },
      py::arg("budget"), py::arg("gamma_db"), py::arg("q"), py::arg("num_antennas"));
  m.def(
      "min_feedback_rate",
      [](const std::vector<double>& gamma_db, const std::vector<double>& q, int num_antennas) {
        return fbq::min_feedback_rate(fbq::QosTargets::from_db(gamma_db, q), num_antennas).b_min;
      },
      py::arg("gamma_db"), py::arg("q"), py::arg("num_antennas"));
  m.def("distortion_bound", &fbq::distortion_bound, py::arg("budget"), py::arg("num_antennas"),
        py::arg("q_bar"));

  m.def(
      "run_experiment",
      [](const std::string& experiment, const std::string& config,
         std::optional<std::uint64_t> seed, int threads, bool monte_carlo) {
        const auto cfg = make_config(experiment, config, seed, threads, monte_carlo);
        fbq::ResultTable t;
        {
          py::gil_scoped_release release;
          t = fbq::run_experiment(cfg);
        }
        py::dict columns;
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
          py::list values;
          for (const auto& row : t.rows) {
            std::visit([&](const auto& v) { values.append(v); }, row[c]);
          }
          columns[py::str(t.columns[c])] = values;
        }
        return columns;
      },
      py::arg("experiment"), py::arg("config"), py::arg("seed") = py::none(),
      py::arg("threads") = 1, py::arg("monte_carlo") = false,
      "Run an experiment from config text; returns {column: values}.");
  m.def(
      "run_experiment_csv",
      [](const std::string& experiment, const std::string& config,
         std::optional<std::uint64_t> seed, int threads, bool monte_carlo) {
        const auto cfg = make_config(experiment, config, seed, threads, monte_carlo);
        std::ostringstream os;
        {
          py::gil_scoped_release release;
          fbq::write_csv(os, fbq::run_experiment(cfg), cfg);
        }
        return os.str();
      },
      py::arg("experiment"), py::arg("config"), py::arg("seed") = py::none(),
      py::arg("threads") = 1, py::arg("monte_carlo") = false);
}
