#include "vpsgd/oracle.hpp"

#include "vpsgd/dynamics.hpp"
#include "vpsgd/errors.hpp"
#include "vpsgd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace vpsgd {

namespace {

void check_n(std::int64_t n) {
  if (n < 1) throw UsageError("N must be >= 1");
}

double alpha_of(const ParamVec& theta) {
  if (theta.size() != 2) throw UsageError("quadratic model has two parameters");
  return theta[0] + theta[1];
}

double stationary_ar1_variance(double rate, double noise_variance, double dt) {
  const double phi = 1.0 - rate * dt;
  if (!(std::abs(phi) < 1.0)) throw UsageError("explicit Euler chain has no stationary law at this dt");
  return noise_variance * dt / (1.0 - phi * phi);
}

OracleReport make_report(std::string name, double computed, double reference, double rel) {
  return {std::move(name), computed, reference, std::abs(computed - reference), rel};
}

}  // namespace

void QuadraticTruth::validate() const {
  if (!(theta01 > 0.0)) throw UsageError("quadratic truth requires theta01 > 0");
  if (!(alpha0() > 0.0)) throw UsageError("quadratic truth requires theta01 + theta02 > 0");
  if (!(sigma > 0.0)) throw UsageError("quadratic truth requires sigma > 0");
}

double mf_objective_quadratic(const ParamVec& theta, const QuadraticTruth& truth) {
  truth.validate();
  const double gap = alpha_of(theta) - truth.alpha0();
  return gap * gap / (4.0 * truth.alpha0());
}

double finite_n_objective_quadratic(const ParamVec& theta, const QuadraticTruth& truth, std::int64_t n) {
  truth.validate();
  check_n(n);
  const double nn = static_cast<double>(n);
  const double a0 = truth.alpha0();
  const double t1 = truth.theta01;
  const double t2 = truth.theta02;
  const double denom = nn * t1 + t2;
  const double gap = alpha_of(theta) - pseudo_targets(truth, n).alpha_star;
  return denom / (4.0 * nn * a0 * t1) * gap * gap + (nn - 1.0) * t2 * t2 / (4.0 * nn * denom);
}

PseudoTargets pseudo_targets(const QuadraticTruth& truth, std::int64_t n) {
  truth.validate();
  check_n(n);
  const double nn = static_cast<double>(n);
  const double t1 = truth.theta01;
  const double t2 = truth.theta02;
  const double denom = nn * t1 + t2;
  return {nn * t1 * truth.alpha0() / denom, (nn * t1 * t1 - t2 * t2) / denom, (nn - 1.0) * t1 * t2 / denom};
}

StationaryMoments stationary_moments_quadratic(const QuadraticTruth& truth, std::int64_t n) {
  truth.validate();
  check_n(n);
  const double nn = static_cast<double>(n);
  const double s2 = truth.sigma * truth.sigma;
  const double mean_var = s2 / (2.0 * nn * truth.theta01);
  return {mean_var + (nn - 1.0) / nn * s2 / (2.0 * truth.alpha0()), mean_var};
}

StationaryMoments euler_stationary_moments_quadratic(const QuadraticTruth& truth, std::int64_t n, double dt) {
  truth.validate();
  check_n(n);
  if (!(dt > 0.0)) throw UsageError("dt must be > 0");
  const double nn = static_cast<double>(n);
  const double s2 = truth.sigma * truth.sigma;
  // xbar and x_i - xbar are independent AR(1) chains
  const double mean_var = stationary_ar1_variance(truth.theta01, s2 / nn, dt);
  const double spread_var = n > 1 ? stationary_ar1_variance(truth.alpha0(), s2 * (nn - 1.0) / nn, dt) : 0.0;
  return {mean_var + spread_var, mean_var};
}

OracleReport fd_tangent_check(const Model& model, const ParamVec& theta, Index m, double dt, std::int64_t steps,
                              double epsilon, std::uint64_t seed) {
  validate_theta(model, theta);
  if (m < 1) throw UsageError("M must be >= 1");
  if (steps < 0) throw UsageError("steps must be >= 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw UsageError("epsilon must be finite and > 0");
  for (Index a = 0; a < theta.size(); ++a) {
    if (theta[a] + epsilon == theta[a] || theta[a] - epsilon == theta[a]) {
      throw UsageError("epsilon underflows against theta");
    }
  }
  const Index d = model.state_dim();
  const Index p = model.param_dim();

  RngStream init_rng(seed, 0);
  const Ensemble initial = sample_initial(model, InitialLaw::standard_gaussian(d), m, init_rng);
  RngStream noise_rng(seed, 1);
  std::vector<RowMatrix> noise(static_cast<std::size_t>(steps), RowMatrix(m, d));
  for (auto& block : noise) noise_rng.fill_gaussian(block);

  auto run = [&](const ParamVec& th) {
    Ensemble x = initial;
    for (const auto& block : noise) x = euler_ips_step(model, th, x, dt, block);
    return x;
  };

  Ensemble hat = initial;
  TangentEnsemble tangent(m, p, d);
  for (const auto& block : noise) {
    tangent = euler_tangent_step(model, theta, hat, tangent, dt);
    hat = euler_ips_step(model, theta, hat, dt, block);
  }

  double worst = 0.0;
  for (Index a = 0; a < p; ++a) {
    ParamVec up = theta;
    ParamVec down = theta;
    up[a] += epsilon;
    down[a] -= epsilon;
    const Ensemble xu = run(up);
    const Ensemble xd = run(down);
    const double width = up[a] - down[a];
    double max_diff = 0.0;
    double max_tangent = 0.0;
    for (Index i = 0; i < m; ++i) {
      for (Index l = 0; l < d; ++l) {
        double diff = xu.positions()(i, l) - xd.positions()(i, l);
        if (model.wraps(l)) diff = wrap_angle(diff);
        const double fd = diff / width;
        const double tan = tangent.block(i)(a, l);
        max_diff = std::max(max_diff, std::abs(fd - tan));
        max_tangent = std::max(max_tangent, std::abs(tan));
      }
    }
    if (max_tangent > 0.0) {
      worst = std::max(worst, max_diff / max_tangent);
    } else if (max_diff > 0.0) {
      worst = std::numeric_limits<double>::infinity();
    }
  }
  return make_report("fd_tangent_max_rel_error", worst, 0.0, worst);
}

OracleReport rao_blackwell_check(const Model& model, const EstimatorState& state, const StateVec& x_obs,
                                 const StateVec& dx_obs, double dt) {
  const double gamma = state.settings.rate(state.clock());
  const ParamVec averaged = averaged_increment(model, state.theta, x_obs, dx_obs, state.hat, state.hat_tangent,
                                               state.tilde, dt, gamma);
  ParamVec sum = ParamVec::Zero(model.param_dim());
  for (Index j = 0; j < state.hat.size(); ++j) {
    for (Index k = 0; k < state.tilde.size(); ++k) {
      sum += particlewise_increment(model, state.theta, x_obs, dx_obs, state.hat, state.hat_tangent, state.tilde, j,
                                    k, dt, gamma);
    }
  }
  const ParamVec exhaustive = sum / static_cast<double>(state.hat.size() * state.tilde.size());
  const double scale = std::max(averaged.lpNorm<Eigen::Infinity>(), exhaustive.lpNorm<Eigen::Infinity>());
  const double diff = (averaged - exhaustive).lpNorm<Eigen::Infinity>();
  const double rel = scale > 0.0 ? diff / scale : 0.0;
  OracleReport report = make_report("rao_blackwell_rel_discrepancy", rel, 0.0, rel);
  report.abs_error = diff;
  return report;
}

CheckCase random_check_case(const Model& model, Index m, RngStream& rng) {
  if (m < 1) throw UsageError("M must be >= 1");
  const Index d = model.state_dim();
  const Index p = model.param_dim();
  ParamVec theta(p);
  for (Index a = 0; a < p; ++a) theta[a] = rng.uniform(0.1, 2.0);

  auto draw_ensemble = [&] {
    RowMatrix pos(m, d);
    rng.fill_gaussian(pos);
    Ensemble e(std::move(pos));
    for (Index i = 0; i < m; ++i)
      for (Index l = 0; l < d; ++l)
        if (model.wraps(l)) e.particle(i)[l] = wrap_angle(e.particle(i)[l]);
    return e;
  };

  EstimatorSettings settings;
  settings.rate = LearningRate::constant(rng.uniform(0.01, 1.0));
  Ensemble hat = draw_ensemble();
  Ensemble tilde = draw_ensemble();
  EstimatorState state = make_estimator_state(model, std::move(settings), theta, std::move(hat), std::move(tilde),
                                              RngStream(rng.seed(), 100), RngStream(rng.seed(), 101),
                                              RngStream(rng.seed(), 102));
  rng.fill_gaussian(state.hat_tangent.data());

  StateVec x_obs(d);
  StateVec dx_obs(d);
  for (Index l = 0; l < d; ++l) {
    x_obs[l] = rng.gaussian();
    if (model.wraps(l)) x_obs[l] = wrap_angle(x_obs[l]);
    dx_obs[l] = 0.3 * rng.gaussian();
  }
  return {std::move(state), std::move(x_obs), std::move(dx_obs)};
}

}  // namespace vpsgd
