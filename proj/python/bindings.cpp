#include "vpsgd/config.hpp"
#include "vpsgd/errors.hpp"
#include "vpsgd/experiment.hpp"
#include "vpsgd/oracle.hpp"
#include "vpsgd/output.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace vpsgd;

namespace {

QuadraticTruth truth_of(double theta01, double theta02, double sigma) { return {theta01, theta02, sigma}; }

py::dict trace_to_dict(const RunTrace& t) {
  py::list variants;
  for (Variant v : t.variants) variants.append(std::string(to_string(v)));
  py::dict d;
  d["seed"] = t.seed;
  d["variants"] = variants;
  d["p"] = t.p;
  d["steps"] = t.steps;
  d["times"] = t.times;
  d["values"] = Eigen::MatrixXd(t.values);
  d["diverged"] = t.diverged;
  d["diagnostic"] = t.diagnostic;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online parameter estimation for interacting particle systems";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<NumericInputError>(m, "NumericInputError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  m.def(
      "drift",
      [](const std::string& model, const ParamVec& theta, const StateVec& x, const StateVec& y) {
        return StateVec(drift_kernel(Model::from_name(model), theta, x, y));
      },
      py::arg("model"), py::arg("theta"), py::arg("x"), py::arg("y"), "Pairwise drift b(theta, x, y).");

  m.def(
      "pseudo_targets",
      [](double theta01, double theta02, std::int64_t n, double sigma) {
        const auto pt = pseudo_targets(truth_of(theta01, theta02, sigma), n);
        py::dict d;
        d["alpha_star"] = pt.alpha_star;
        d["theta1_star"] = pt.theta1_star;
        d["theta2_star"] = pt.theta2_star;
        return d;
      },
      py::arg("theta01"), py::arg("theta02"), py::arg("n"), py::arg("sigma") = 1.0);

  m.def(
      "stationary_moments",
      [](double theta01, double theta02, std::int64_t n, double sigma, std::optional<double> dt) {
        const auto t = truth_of(theta01, theta02, sigma);
        const auto mom = dt ? euler_stationary_moments_quadratic(t, n, *dt) : stationary_moments_quadratic(t, n);
        py::dict d;
        d["particle_variance"] = mom.particle_variance;
        d["mean_variance"] = mom.mean_variance;
        return d;
      },
      py::arg("theta01"), py::arg("theta02"), py::arg("n"), py::arg("sigma") = 1.0, py::arg("dt") = py::none(),
      "Stationary variances of the quadratic system; with dt, of its Euler chain.");

  m.def(
      "mf_objective",
      [](const ParamVec& theta, double theta01, double theta02) {
        return mf_objective_quadratic(theta, truth_of(theta01, theta02, 1.0));
      },
      py::arg("theta"), py::arg("theta01"), py::arg("theta02"));

  m.def(
      "finite_n_objective",
      [](const ParamVec& theta, double theta01, double theta02, std::int64_t n, double sigma) {
        return finite_n_objective_quadratic(theta, truth_of(theta01, theta02, sigma), n);
      },
      py::arg("theta"), py::arg("theta01"), py::arg("theta02"), py::arg("n"), py::arg("sigma") = 1.0);

  m.def(
      "tangent_fd_error",
      [](const std::string& model, const ParamVec& theta, Index particles, double dt, std::int64_t steps,
         double epsilon, std::uint64_t seed) {
        return fd_tangent_check(Model::from_name(model), theta, particles, dt, steps, epsilon, seed).rel_error;
      },
      py::arg("model"), py::arg("theta"), py::arg("m") = 3, py::arg("dt") = 0.05, py::arg("steps") = 200,
      py::arg("epsilon") = 1e-5, py::arg("seed") = 1);

  m.def(
      "rao_blackwell_error",
      [](const std::string& model, Index particles, int cases, std::uint64_t seed) {
        const Model mod = Model::from_name(model);
        RngStream rng(seed, 7);
        double worst = 0.0;
        for (int i = 0; i < cases; ++i) {
          const auto c = random_check_case(mod, particles, rng);
          worst = std::max(worst, rao_blackwell_check(mod, c.state, c.x_obs, c.dx_obs, 0.1).rel_error);
        }
        return worst;
      },
      py::arg("model"), py::arg("m"), py::arg("cases") = 100, py::arg("seed") = 1);

  m.def("figure_ids", &figure_ids);
  m.def(
      "figure_preset", [](const std::string& id) { return serialize_config(figure_preset(id)); }, py::arg("id"),
      "Built-in preset as a JSON string.");

  m.def(
      "run",
      [](const std::string& config_json) {
        const auto cfg = parse_config(config_json, "<python>");
        std::vector<RunTrace> traces;
        {
          py::gil_scoped_release release;
          traces = run_experiment(cfg);
        }
        py::list out;
        for (const auto& t : traces) out.append(trace_to_dict(t));
        return out;
      },
      py::arg("config_json"), "Runs every seed of a JSON config and returns one dict per seed.");

  m.def(
      "replicate",
      [](const std::string& id, const std::string& out_dir, double scale) {
        py::gil_scoped_release release;
        return replicate_figure(id, out_dir, scale);
      },
      py::arg("id"), py::arg("out_dir"), py::arg("scale") = 1.0, "Returns True when any run diverged.");
}
