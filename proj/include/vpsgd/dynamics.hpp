#pragma once

#include "vpsgd/ensemble.hpp"
#include "vpsgd/models.hpp"
#include "vpsgd/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vpsgd {

/// Piecewise-constant true parameter in the step index. Segment i applies to
/// steps in [until_{i-1}, until_i).
class TruthSchedule {
 public:
  struct Segment {
    std::int64_t until_step;
    ParamVec theta;
  };

  TruthSchedule() = default;
  explicit TruthSchedule(std::vector<Segment> segments);
  static TruthSchedule constant(ParamVec theta, std::int64_t until_step);

  const ParamVec& at(std::int64_t step) const;
  /// Throws UsageError unless the schedule covers steps [0, steps).
  void check_covers(std::int64_t steps) const;

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  bool empty() const noexcept { return segments_.empty(); }

  friend bool operator==(const TruthSchedule& a, const TruthSchedule& b);

 private:
  std::vector<Segment> segments_;
};

/// Law of the initial particle positions.
struct InitialLaw {
  enum class Kind { gaussian, uniform, explicit_positions };
  Kind kind = Kind::gaussian;
  StateVec a;            // gaussian: mean, uniform: lower bound
  StateVec b;            // gaussian: sd,   uniform: upper bound
  RowMatrix positions;   // explicit: one row per particle; the first `count` rows are used

  static InitialLaw standard_gaussian(Index d);
  friend bool operator==(const InitialLaw& x, const InitialLaw& y);
};

/// Draws `count` i.i.d. particles (particle-major) and wraps torus coordinates.
Ensemble sample_initial(const Model& model, const InitialLaw& law, Index count, RngStream& rng);

/// One synchronous Euler-Maruyama step driven by explicit standard normals
/// `noise` (count x d). If `increments` is non-null it receives the raw,
/// unwrapped displacement of every particle.
Ensemble euler_ips_step(const Model& model, const ParamVec& theta, const Ensemble& ensemble, double dt,
                        const RowMatrix& noise, RowMatrix* increments = nullptr);

/// Same step with noise drawn from `rng`.
Ensemble euler_ips_step(const Model& model, const ParamVec& theta, const Ensemble& ensemble, double dt,
                        RngStream& rng, RowMatrix* increments = nullptr);

/// Explicit Euler step of the tangent system attached to `hat`. Purely
/// deterministic; uses pre-step positions and sensitivities for every pair.
TangentEnsemble euler_tangent_step(const Model& model, const ParamVec& theta, const Ensemble& hat,
                                   const TangentEnsemble& tangent, double dt);

/// A single particle's observed trajectory. `increments` row k is
/// x_{k+1} - x_k before wrapping.
struct ObservedPath {
  RowMatrix positions;   // (steps + 1) x d
  RowMatrix increments;  // steps x d
  Index steps() const noexcept { return increments.rows(); }
};

ObservedPath simulate_observed(const Model& model, const TruthSchedule& schedule, Ensemble initial,
                               std::int64_t steps, double dt, RngStream& rng, Index observed = 0);

ObservedPath simulate_observed(const Model& model, const TruthSchedule& schedule, const InitialLaw& law, Index n,
                               std::int64_t steps, double dt, RngStream& rng, Index observed = 0);

/// True when rate * dt stays below the explicit-Euler mean-square bound.
bool euler_step_is_stable(const Model& model, const ParamVec& theta, double dt);

/// Number of stability warnings emitted by the steppers in this process.
std::uint64_t stability_warning_count() noexcept;

}  // namespace vpsgd
