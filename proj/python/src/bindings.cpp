#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "streamgp/bench.hpp"
#include "streamgp/metrics.hpp"

namespace py = pybind11;
using namespace streamgp;

namespace {

BasisFamily make_basis(const std::string& name, double window) {
  if (name == "legs") return BasisFamily::legs();
  if (name == "legt") return BasisFamily::legt(window);
  if (name == "lagt") return BasisFamily::lagt();
  if (name == "fout") return BasisFamily::fout(window);
  throw InputError("unknown basis '" + name + "'");
}

Scheme make_scheme(const std::string& name) {
  if (name == "euler") return Scheme::kForwardEuler;
  if (name == "bilinear") return Scheme::kBilinear;
  throw InputError("unknown scheme '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_streamgp, m) {
  m.doc() = "Streaming sparse GP regression with HiPPO inducing variables";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Kernel>(m, "Kernel")
      .def_static("rbf", py::overload_cast<double, Eigen::VectorXd>(&Kernel::ard_rbf), py::arg("outputscale"),
                  py::arg("lengthscales"))
      .def_static("matern52", py::overload_cast<double, Eigen::VectorXd>(&Kernel::matern52), py::arg("outputscale"),
                  py::arg("lengthscales"))
      .def_readwrite("outputscale", &Kernel::output_scale_sq)
      .def_readwrite("lengthscales", &Kernel::lengthscales)
      .def("__call__", [](const Kernel& k, const MatrixXd& X, const MatrixXd& X2) { return kernel_matrix(k, X, X2); });

  m.def(
      "hippo_coefficients",
      [](const Eigen::VectorXd& samples, const std::string& basis, int order, double dt, const std::string& scheme,
         double window) {
        const HippoOperator op(make_basis(basis, window), order);
        CoefficientState s = initial_coefficients(op, dt, make_scheme(scheme));
        for (Eigen::Index i = 0; i < samples.size(); ++i) s = step_coefficients(s, op, samples[i]);
        return s.coeffs;
      },
      py::arg("samples"), py::arg("basis") = "legs", py::arg("order") = 8, py::arg("dt") = 1e-3,
      py::arg("scheme") = "euler", py::arg("window") = 1.0,
      "Memory state after driving the recurrence with y(i dt), i = 1..len(samples).");

  m.def(
      "generate_synthetic",
      [](const std::string& kind, long n, double noise_sd, std::uint64_t seed, double span) {
        const DataBatch d = generate_synthetic(kind, n, noise_sd, seed, span);
        return py::make_tuple(d.X, d.y);
      },
      py::arg("kind"), py::arg("n"), py::arg("noise_sd") = 0.2, py::arg("seed") = 0, py::arg("span") = 1.0);

  m.def("rmse", &rmse, py::arg("y"), py::arg("yhat"));
  m.def(
      "nlpd",
      [](const Eigen::VectorXd& mean, const Eigen::VectorXd& var, const Eigen::VectorXd& y) {
        Predictive p;
        p.mean = mean;
        p.variance = var;
        p.includes_noise = true;
        return nlpd(p, y);
      },
      py::arg("mean"), py::arg("variance"), py::arg("y"));

  m.def(
      "run_experiment",
      [](const std::string& config_text) {
        const MetricsReport r = run_experiment(parse_config(config_text));
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict d;
          d["task_learned"] = row.task_learned;
          d["task_eval"] = row.task_eval;
          d["rmse"] = row.rmse;
          d["nlpd"] = row.nlpd;
          d["wall_ms"] = row.wall_ms;
          rows.append(d);
        }
        return rows;
      },
      py::arg("config"), "Runs a config given as `key = value` text; returns the metric rows.");

  m.def(
      "oracle_check",
      [](const std::string& config_text) {
        const OracleReport r = oracle_check(parse_config(config_text));
        py::list rows;
        for (const auto& row : r.rows) {
          rows.append(py::make_tuple(row.name, row.value, row.threshold, row.pass, row.recorded_only));
        }
        return rows;
      },
      py::arg("config") = "");
}
