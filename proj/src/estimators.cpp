#include "vpsgd/estimators.hpp"

#include "vpsgd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vpsgd {

namespace {

std::vector<double> to_std(const ParamVec& v) { return {v.data(), v.data() + v.size()}; }

void check_increment_args(const Model& model, const ParamVec& theta, const StateVec& x_obs, const StateVec& dx_obs,
                          const Ensemble& hat, const TangentEnsemble& tangent, const Ensemble& tilde, double dt,
                          double gamma) {
  validate_theta(model, theta);
  const Index d = model.state_dim();
  if (x_obs.size() != d || dx_obs.size() != d) throw UsageError("observation length must equal model dimension");
  if (!x_obs.allFinite() || !dx_obs.allFinite()) throw NumericInputError("non-finite observation");
  if (hat.empty() || tilde.empty()) throw UsageError("virtual ensembles must be non-empty");
  if (hat.dim() != d || tilde.dim() != d) throw UsageError("virtual ensemble dimension mismatch");
  if (tangent.size() != hat.size() || tangent.param_dim() != model.param_dim() || tangent.dim() != d) {
    throw UsageError("tangent ensemble shape does not match the hat ensemble");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("dt must be finite and > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw UsageError("gamma must be finite and >= 0");
}

// out (p x d) += d_theta b(x, xj) + yj . grad_y b(x, xj)
template <class K>
inline void add_gradient_row(const K& kernel, const double* th, const double* x, const double* xj, const double* yj,
                             double* out) noexcept {
  constexpr int d = K::kDim;
  constexpr int p = K::kParams;
  double dth[p * d];
  double jy[d * d];
  kernel.dtheta(th, x, xj, dth);
  kernel.dy(th, x, xj, jy);
  for (int a = 0; a < p; ++a) {
    for (int l = 0; l < d; ++l) {
      double s = dth[a * d + l];
      for (int k = 0; k < d; ++k) s += yj[a * d + k] * jy[k * d + l];
      out[a * d + l] += s;
    }
  }
}

// delta = -gamma * grad (p x d) * W * (drift * dt - dx)
template <int P, int D>
ParamVec assemble(const double* grad, const double* drift, const Eigen::MatrixXd& weight, const StateVec& dx,
                  double dt, double gamma) {
  double residual[D];
  for (int l = 0; l < D; ++l) residual[l] = drift[l] * dt - dx[l];
  double weighted[D];
  for (int l = 0; l < D; ++l) {
    double s = 0.0;
    for (int m = 0; m < D; ++m) s += weight(l, m) * residual[m];
    weighted[l] = s;
  }
  ParamVec delta(P);
  for (int a = 0; a < P; ++a) {
    double s = 0.0;
    for (int l = 0; l < D; ++l) s += grad[a * D + l] * weighted[l];
    delta[a] = -gamma * s;
  }
  return delta;
}

void require_finite(const ParamVec& delta, const ParamVec& theta) {
  if (!delta.allFinite()) throw DivergenceError("parameter increment is not finite", -1, to_std(theta));
}

}  // namespace

LearningRate LearningRate::polynomial(double c, double beta) {
  if (!(c >= 0.0) || !std::isfinite(c) || !std::isfinite(beta)) {
    throw UsageError("learning rate: c must be finite and >= 0, beta finite");
  }
  return {Kind::polynomial, c, beta};
}

LearningRate LearningRate::constant(double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw UsageError("learning rate: c must be finite and >= 0");
  return {Kind::constant, c, 0.0};
}

double LearningRate::operator()(double t) const {
  if (!(t >= 0.0)) throw UsageError("learning rate evaluated at negative time");
  if (kind == Kind::constant) return c;
  return c / std::pow(1.0 + t, beta);
}

bool LearningRate::satisfies_robbins_monro() const noexcept {
  return kind == Kind::polynomial && c > 0.0 && beta > 0.5 && beta <= 1.0;
}

double learning_rate(const LearningRate& schedule, double t) { return schedule(t); }

std::string_view to_string(Variant v) { return v == Variant::averaged ? "averaged" : "particlewise"; }
std::string_view to_string(IndexPolicy v) { return v == IndexPolicy::fixed ? "fixed" : "resample"; }
std::string_view to_string(ClockConvention v) { return v == ClockConvention::iteration ? "iteration" : "time"; }

Variant variant_from_string(std::string_view s) {
  if (s == "averaged") return Variant::averaged;
  if (s == "particlewise") return Variant::particlewise;
  throw UsageError("unknown estimator variant \"" + std::string(s) + "\"");
}

IndexPolicy index_policy_from_string(std::string_view s) {
  if (s == "fixed") return IndexPolicy::fixed;
  if (s == "resample") return IndexPolicy::resample;
  throw UsageError("unknown index policy \"" + std::string(s) + "\"");
}

ClockConvention clock_from_string(std::string_view s) {
  if (s == "iteration") return ClockConvention::iteration;
  if (s == "time") return ClockConvention::time;
  throw UsageError("unknown clock convention \"" + std::string(s) + "\"");
}

ParamVec averaged_increment(const Model& model, const ParamVec& theta, const StateVec& x_obs, const StateVec& dx_obs,
                            const Ensemble& hat, const TangentEnsemble& hat_tangent, const Ensemble& tilde, double dt,
                            double gamma) {
  check_increment_args(model, theta, x_obs, dx_obs, hat, hat_tangent, tilde, dt, gamma);
  ParamVec delta = model.visit([&](const auto& kernel) {
    using K = std::decay_t<decltype(kernel)>;
    constexpr int d = K::kDim;
    constexpr int p = K::kParams;
    const double* th = theta.data();
    double grad[p * d] = {};
    for (Index j = 0; j < hat.size(); ++j) {
      add_gradient_row(kernel, th, x_obs.data(), hat.particle(j), hat_tangent.raw(j), grad);
    }
    for (double& g : grad) g /= static_cast<double>(hat.size());
    double drift[d];
    detail::mean_kernel_drift(kernel, th, x_obs.data(), tilde.positions(), drift);
    return assemble<p, d>(grad, drift, model.weight(), dx_obs, dt, gamma);
  });
  require_finite(delta, theta);
  return delta;
}

ParamVec particlewise_increment(const Model& model, const ParamVec& theta, const StateVec& x_obs,
                                const StateVec& dx_obs, const Ensemble& hat, const TangentEnsemble& hat_tangent,
                                const Ensemble& tilde, Index j, Index k, double dt, double gamma) {
  check_increment_args(model, theta, x_obs, dx_obs, hat, hat_tangent, tilde, dt, gamma);
  if (j < 0 || j >= hat.size() || k < 0 || k >= tilde.size()) {
    throw UsageError("particle index out of range: j=" + std::to_string(j) + ", k=" + std::to_string(k));
  }
  ParamVec delta = model.visit([&](const auto& kernel) {
    using K = std::decay_t<decltype(kernel)>;
    constexpr int d = K::kDim;
    constexpr int p = K::kParams;
    const double* th = theta.data();
    double grad[p * d] = {};
    add_gradient_row(kernel, th, x_obs.data(), hat.particle(j), hat_tangent.raw(j), grad);
    double drift[d];
    kernel.drift(th, x_obs.data(), tilde.particle(k), drift);
    return assemble<p, d>(grad, drift, model.weight(), dx_obs, dt, gamma);
  });
  require_finite(delta, theta);
  return delta;
}

ParamVec apply_free_mask(const ParamVec& delta, const FreeMask& mask) {
  if (static_cast<Index>(mask.size()) != delta.size()) throw UsageError("mask length must equal parameter length");
  ParamVec out = delta;
  for (Index a = 0; a < out.size(); ++a) {
    if (!mask[static_cast<std::size_t>(a)]) out[a] = 0.0;
  }
  return out;
}

double EstimatorState::clock() const noexcept {
  return settings.clock == ClockConvention::iteration ? static_cast<double>(step) : t;
}

EstimatorState make_estimator_state(const Model& model, EstimatorSettings settings, ParamVec theta_init, Ensemble hat,
                                    Ensemble tilde, RngStream hat_rng, RngStream tilde_rng, RngStream index_rng) {
  validate_theta(model, theta_init);
  const Index p = model.param_dim();
  if (settings.mask.empty()) settings.mask.assign(static_cast<std::size_t>(p), true);
  if (static_cast<Index>(settings.mask.size()) != p) throw UsageError("mask length must equal parameter length");
  if (hat.empty() || tilde.empty() || hat.size() != tilde.size()) {
    throw UsageError("virtual ensembles must be non-empty and of equal size M");
  }
  if (hat.dim() != model.state_dim() || tilde.dim() != model.state_dim()) {
    throw UsageError("virtual ensemble dimension mismatch");
  }
  if (settings.j < 0 || settings.j >= hat.size() || settings.k < 0 || settings.k >= tilde.size()) {
    throw UsageError("particlewise indices must lie in [0, M)");
  }
  if (settings.projection) {
    const Box& box = *settings.projection;
    if (box.lower.size() != p || box.upper.size() != p || (box.lower.array() > box.upper.array()).any()) {
      throw UsageError("projection box must have ordered bounds of length p");
    }
  }
  EstimatorState s;
  s.j = settings.j;
  s.k = settings.k;
  s.settings = std::move(settings);
  s.theta = std::move(theta_init);
  s.hat_tangent = TangentEnsemble(hat.size(), p, model.state_dim());
  s.hat = std::move(hat);
  s.tilde = std::move(tilde);
  s.hat_rng = std::move(hat_rng);
  s.tilde_rng = std::move(tilde_rng);
  s.index_rng = std::move(index_rng);
  return s;
}

void estimator_advance(const Model& model, EstimatorState& state, const StateVec& x_obs, const StateVec& dx_obs,
                       double dt) {
  const EstimatorSettings& cfg = state.settings;
  const double gamma = cfg.rate(state.clock());

  Index j = state.j;
  Index k = state.k;
  std::optional<RngStream> index_rng;
  if (cfg.variant == Variant::particlewise && cfg.index_policy == IndexPolicy::resample) {
    index_rng = state.index_rng;
    j = index_rng->index_below(state.hat.size());
    k = index_rng->index_below(state.tilde.size());
  }

  ParamVec delta;
  try {
    delta = cfg.variant == Variant::averaged
                ? averaged_increment(model, state.theta, x_obs, dx_obs, state.hat, state.hat_tangent, state.tilde,
                                     dt, gamma)
                : particlewise_increment(model, state.theta, x_obs, dx_obs, state.hat, state.hat_tangent,
                                         state.tilde, j, k, dt, gamma);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(state.step), state.step,
                          to_std(state.theta));
  }
  delta = apply_free_mask(delta, cfg.mask);

  ParamVec theta_next = state.theta + delta;
  if (cfg.projection) {
    for (Index a = 0; a < theta_next.size(); ++a) {
      if (cfg.mask[static_cast<std::size_t>(a)]) {
        theta_next[a] = std::clamp(theta_next[a], cfg.projection->lower[a], cfg.projection->upper[a]);
      }
    }
  }
  if (!theta_next.allFinite()) {
    throw DivergenceError("parameter estimate left the finite reals at step " + std::to_string(state.step),
                          state.step, to_std(state.theta));
  }

  // virtual systems move with the pre-update parameter
  RngStream hat_rng = state.hat_rng;
  RngStream tilde_rng = state.tilde_rng;
  TangentEnsemble tangent_next = euler_tangent_step(model, state.theta, state.hat, state.hat_tangent, dt);
  Ensemble hat_next = euler_ips_step(model, state.theta, state.hat, dt, hat_rng);
  Ensemble tilde_next = euler_ips_step(model, state.theta, state.tilde, dt, tilde_rng);
  if (!hat_next.all_finite() || !tilde_next.all_finite() || !tangent_next.all_finite()) {
    throw DivergenceError("virtual particle system left the finite reals at step " + std::to_string(state.step),
                          state.step, to_std(state.theta));
  }

  state.theta = std::move(theta_next);
  state.hat = std::move(hat_next);
  state.tilde = std::move(tilde_next);
  state.hat_tangent = std::move(tangent_next);
  state.hat_rng = std::move(hat_rng);
  state.tilde_rng = std::move(tilde_rng);
  if (index_rng) state.index_rng = std::move(*index_rng);
  state.j = j;
  state.k = k;
  state.t += dt;
  state.step += 1;
}

EstimatorState estimator_step(const Model& model, const EstimatorState& state, const StateVec& x_obs,
                              const StateVec& dx_obs, double dt) {
  EstimatorState next = state;
  estimator_advance(model, next, x_obs, dx_obs, dt);
  return next;
}

}  // namespace vpsgd
