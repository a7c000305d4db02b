#pragma once

#include "vpsgd/ensemble.hpp"
#include "vpsgd/estimators.hpp"
#include "vpsgd/models.hpp"

#include <cstdint>
#include <string>

namespace vpsgd {

/// True parameters of the quadratic-confinement, quadratic-interaction model.
struct QuadraticTruth {
  double theta01;
  double theta02;
  double sigma = 1.0;

  double alpha0() const noexcept { return theta01 + theta02; }
  /// Throws UsageError unless theta01 > 0, alpha0 > 0 and sigma > 0.
  void validate() const;
};

struct OracleReport {
  std::string quantity;
  double computed = 0.0;
  double reference = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

/// Mean-field objective (alpha - alpha0)^2 / (4 alpha0), alpha = theta_1 + theta_2.
double mf_objective_quadratic(const ParamVec& theta, const QuadraticTruth& truth);

/// Finite-N objective seen from one observed particle.
double finite_n_objective_quadratic(const ParamVec& theta, const QuadraticTruth& truth, std::int64_t n);

struct PseudoTargets {
  double alpha_star;
  double theta1_star;  // theta_2 known, theta_1 estimated
  double theta2_star;  // theta_1 known, theta_2 estimated
};

/// Minimisers of the finite-N objective. theta1_star and theta2_star are the
/// direct closed forms, not alpha_star minus the known coordinate.
PseudoTargets pseudo_targets(const QuadraticTruth& truth, std::int64_t n);

struct StationaryMoments {
  double particle_variance;  // Var(x^{i,N})
  double mean_variance;      // Var(xbar^N) = Cov(x^{i,N}, xbar^N)
};

/// Continuous-time stationary moments of the N-particle system.
StationaryMoments stationary_moments_quadratic(const QuadraticTruth& truth, std::int64_t n);

/// The same moments for the explicit Euler chain with step dt (exact for the
/// discretised linear system). Requires both modes to be stable.
StationaryMoments euler_stationary_moments_quadratic(const QuadraticTruth& truth, std::int64_t n, double dt);

/// Compares the integrated tangent ensemble against central finite
/// differences of the virtual system in theta, with common random numbers.
/// The relative error for parameter a is max|fd - tangent| / max|tangent|
/// over particles and coordinates; the report carries the maximum over a.
OracleReport fd_tangent_check(const Model& model, const ParamVec& theta, Index m, double dt, std::int64_t steps,
                              double epsilon, std::uint64_t seed);

/// Compares averaged_increment against the exhaustive (j, k) mean of
/// particlewise_increment on `state`, with gamma taken from its schedule.
OracleReport rao_blackwell_check(const Model& model, const EstimatorState& state, const StateVec& x_obs,
                                 const StateVec& dx_obs, double dt);

/// A random estimator state with a random observation, for property checks.
struct CheckCase {
  EstimatorState state;
  StateVec x_obs;
  StateVec dx_obs;
};

/// Draws theta in a model-specific positive range, standard normal
/// ensembles and tangents, gamma uniform in (0.01, 1) and a random
/// observation. Torus coordinates are wrapped.
CheckCase random_check_case(const Model& model, Index m, RngStream& rng);

}  // namespace vpsgd
