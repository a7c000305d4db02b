#include "vpsgd/models.hpp"

#include "vpsgd/errors.hpp"

#include <string>

namespace vpsgd {

namespace {

void check_vec(const char* what, const Eigen::VectorXd& v, Index expected) {
  if (v.size() != expected) {
    throw UsageError(std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                     std::to_string(v.size()));
  }
  if (!v.allFinite()) throw NumericInputError(std::string(what) + ": non-finite entry");
}

void check_pair_args(const Model& m, const ParamVec& theta, const StateVec& x, const StateVec& y) {
  check_vec("theta", theta, m.param_dim());
  check_vec("x", x, m.state_dim());
  check_vec("y", y, m.state_dim());
}

Eigen::MatrixXd weight_for(const Eigen::MatrixXd& sigma, WeightMode mode) {
  const Index d = sigma.rows();
  if (mode == WeightMode::identity) return Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd cov = sigma * sigma.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  if (!lu.isInvertible()) {
    throw UsageError("likelihood weighting needs an invertible diffusion; use weight mode \"identity\"");
  }
  Eigen::MatrixXd w = lu.inverse();
  // store exactly symmetric
  return 0.5 * (w + w.transpose());
}

}  // namespace

Model::Model(std::string name, Kernel kernel, Eigen::MatrixXd sigma, double sigma_scale, WeightMode mode,
             std::vector<bool> torus)
    : name_(std::move(name)),
      kernel_(kernel),
      sigma_scale_(sigma_scale),
      sigma_(std::move(sigma)),
      weight_mode_(mode),
      torus_(std::move(torus)) {
  std::visit(
      [this](const auto& k) {
        d_ = std::decay_t<decltype(k)>::kDim;
        p_ = std::decay_t<decltype(k)>::kParams;
      },
      kernel_);
  if (!(sigma_scale_ >= 0.0) || !std::isfinite(sigma_scale_)) throw UsageError("sigma must be finite and >= 0");
  weight_ = weight_for(sigma_, weight_mode_);
  for (bool t : torus_) any_torus_ = any_torus_ || t;
}

Model Model::quadratic(double sigma, WeightMode weight) {
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = sigma;
  return Model("quadratic", QuadraticKernel{}, s, sigma, weight, {false});
}

Model Model::fitzhugh_nagumo(double sigma, WeightMode weight) {
  // noise drives the voltage only
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = sigma;
  return Model("fitzhugh-nagumo", FitzHughNagumoKernel{}, s, sigma, weight, {false, false});
}

Model Model::kuramoto(double sigma, WeightMode weight) {
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = sigma;
  return Model("kuramoto", KuramotoKernel{}, s, sigma, weight, {true});
}

Model Model::from_name(std::string_view name, const ModelOptions& options) {
  const double sigma = options.sigma.value_or(1.0);
  if (name == "quadratic") return quadratic(sigma, options.weight.value_or(WeightMode::likelihood));
  if (name == "fitzhugh-nagumo") return fitzhugh_nagumo(sigma, options.weight.value_or(WeightMode::identity));
  if (name == "kuramoto") return kuramoto(sigma, options.weight.value_or(WeightMode::likelihood));
  throw UsageError("unknown model \"" + std::string(name) +
                   "\" (expected quadratic, fitzhugh-nagumo or kuramoto)");
}

std::string_view to_string(WeightMode mode) {
  return mode == WeightMode::likelihood ? "likelihood" : "identity";
}

WeightMode weight_mode_from_string(std::string_view s) {
  if (s == "likelihood") return WeightMode::likelihood;
  if (s == "identity") return WeightMode::identity;
  throw UsageError("unknown weight mode \"" + std::string(s) + "\" (expected likelihood or identity)");
}

void validate_theta(const Model& model, const ParamVec& theta) { check_vec("theta", theta, model.param_dim()); }

StateVec drift_kernel(const Model& model, const ParamVec& theta, const StateVec& x, const StateVec& y) {
  check_pair_args(model, theta, x, y);
  StateVec out(model.state_dim());
  model.visit([&](const auto& k) { k.drift(theta.data(), x.data(), y.data(), out.data()); });
  return out;
}

Eigen::MatrixXd drift_kernel_dtheta(const Model& model, const ParamVec& theta, const StateVec& x,
                                    const StateVec& y) {
  check_pair_args(model, theta, x, y);
  RowMatrix out(model.param_dim(), model.state_dim());
  model.visit([&](const auto& k) { k.dtheta(theta.data(), x.data(), y.data(), out.data()); });
  return out;
}

Eigen::MatrixXd drift_kernel_dx(const Model& model, const ParamVec& theta, const StateVec& x, const StateVec& y) {
  check_pair_args(model, theta, x, y);
  RowMatrix out(model.state_dim(), model.state_dim());
  model.visit([&](const auto& k) { k.dx(theta.data(), x.data(), y.data(), out.data()); });
  return out;
}

Eigen::MatrixXd drift_kernel_dy(const Model& model, const ParamVec& theta, const StateVec& x, const StateVec& y) {
  check_pair_args(model, theta, x, y);
  RowMatrix out(model.state_dim(), model.state_dim());
  model.visit([&](const auto& k) { k.dy(theta.data(), x.data(), y.data(), out.data()); });
  return out;
}

StateVec mean_drift(const Model& model, const ParamVec& theta, const StateVec& x, const Ensemble& ensemble) {
  check_vec("theta", theta, model.param_dim());
  check_vec("x", x, model.state_dim());
  if (ensemble.empty()) throw UsageError("mean_drift: empty ensemble");
  if (ensemble.dim() != model.state_dim()) throw UsageError("mean_drift: ensemble dimension mismatch");
  if (!ensemble.all_finite()) throw NumericInputError("mean_drift: non-finite ensemble entry");
  StateVec out(model.state_dim());
  model.visit([&](const auto& k) {
    detail::mean_kernel_drift(k, theta.data(), x.data(), ensemble.positions(), out.data());
  });
  return out;
}

StateVec wrap_state(const Model& model, const StateVec& x) {
  if (x.size() != model.state_dim()) throw UsageError("wrap_state: dimension mismatch");
  StateVec out = x;
  for (Index l = 0; l < out.size(); ++l) {
    if (model.wraps(l)) out[l] = wrap_angle(out[l]);
  }
  return out;
}

}  // namespace vpsgd
