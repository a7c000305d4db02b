#pragma once

#include "vpsgd/dynamics.hpp"
#include "vpsgd/ensemble.hpp"
#include "vpsgd/models.hpp"
#include "vpsgd/rng.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace vpsgd {

/// gamma(t) = c / (1 + t)^beta (polynomial) or gamma(t) = c (constant).
struct LearningRate {
  enum class Kind { polynomial, constant };
  Kind kind = Kind::polynomial;
  double c = 1.0;
  double beta = 0.55;

  static LearningRate polynomial(double c, double beta);
  static LearningRate constant(double c);

  double operator()(double t) const;
  /// Whether integral gamma = inf and integral gamma^2 < inf, i.e. a
  /// decaying polynomial schedule with beta in (1/2, 1].
  bool satisfies_robbins_monro() const noexcept;

  friend bool operator==(const LearningRate&, const LearningRate&) = default;
};

double learning_rate(const LearningRate& schedule, double t);

/// Averaged uses the full virtual ensembles; particlewise uses one pair (j, k).
enum class Variant { averaged, particlewise };
enum class IndexPolicy { fixed, resample };
/// Argument fed to the learning rate: step count or elapsed time step*dt.
enum class ClockConvention { iteration, time };

std::string_view to_string(Variant v);
std::string_view to_string(IndexPolicy v);
std::string_view to_string(ClockConvention v);
Variant variant_from_string(std::string_view s);
IndexPolicy index_policy_from_string(std::string_view s);
ClockConvention clock_from_string(std::string_view s);

/// Per-coordinate 1 = estimated, 0 = frozen.
using FreeMask = std::vector<bool>;

struct Box {
  ParamVec lower;
  ParamVec upper;
  friend bool operator==(const Box& a, const Box& b) {
    return a.lower.size() == b.lower.size() && a.upper.size() == b.upper.size() && a.lower == b.lower &&
           a.upper == b.upper;
  }
};

/// Delta theta = -gamma G W (B dt - dx) with G the ensemble-averaged
/// gradient of the drift (explicit dependence plus the tangent chain term
/// through the hat ensemble) and B the mean drift against the tilde ensemble.
ParamVec averaged_increment(const Model& model, const ParamVec& theta, const StateVec& x_obs, const StateVec& dx_obs,
                            const Ensemble& hat, const TangentEnsemble& hat_tangent, const Ensemble& tilde, double dt,
                            double gamma);

/// The single-pair version of averaged_increment: uses hat particle j (with
/// its tangent) for the gradient and tilde particle k for the drift. Indices
/// are zero-based.
ParamVec particlewise_increment(const Model& model, const ParamVec& theta, const StateVec& x_obs,
                                const StateVec& dx_obs, const Ensemble& hat, const TangentEnsemble& hat_tangent,
                                const Ensemble& tilde, Index j, Index k, double dt, double gamma);

ParamVec apply_free_mask(const ParamVec& delta, const FreeMask& mask);

struct EstimatorSettings {
  Variant variant = Variant::averaged;
  LearningRate rate;
  ClockConvention clock = ClockConvention::iteration;
  IndexPolicy index_policy = IndexPolicy::fixed;
  Index j = 0;
  Index k = 0;
  FreeMask mask;  // empty = all free
  std::optional<Box> projection;
};

/// Everything the online algorithm carries between observations.
struct EstimatorState {
  EstimatorSettings settings;
  ParamVec theta;
  Ensemble hat;
  TangentEnsemble hat_tangent;
  Ensemble tilde;
  double t = 0.0;
  std::int64_t step = 0;
  Index j = 0;
  Index k = 0;
  RngStream hat_rng;
  RngStream tilde_rng;
  RngStream index_rng;

  double clock() const noexcept;
};

/// Builds an initial state. The tangent starts at zero; the virtual
/// ensembles are taken as given.
EstimatorState make_estimator_state(const Model& model, EstimatorSettings settings, ParamVec theta_init, Ensemble hat,
                                    Ensemble tilde, RngStream hat_rng, RngStream tilde_rng, RngStream index_rng);

/// Advances `state` by one observation increment. On divergence throws
/// DivergenceError and leaves `state` untouched.
void estimator_advance(const Model& model, EstimatorState& state, const StateVec& x_obs, const StateVec& dx_obs,
                       double dt);

/// Value-returning form of estimator_advance.
EstimatorState estimator_step(const Model& model, const EstimatorState& state, const StateVec& x_obs,
                              const StateVec& dx_obs, double dt);

}  // namespace vpsgd
