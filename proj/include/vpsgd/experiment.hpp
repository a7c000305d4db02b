#pragma once

#include "vpsgd/config.hpp"
#include "vpsgd/dynamics.hpp"
#include "vpsgd/estimators.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vpsgd {

/// Recorded parameter trajectories of one seed. Row r of `values` holds the
/// estimate of every variant at `steps[r]`, variant v occupying columns
/// [v*p, (v+1)*p).
struct RunTrace {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<Variant> variants;
  Index p = 0;
  std::vector<std::int64_t> steps;
  std::vector<double> times;
  RowMatrix values;
  bool diverged = false;
  std::string diagnostic;

  Index rows() const noexcept { return static_cast<Index>(steps.size()); }
  Index variant_index(Variant v) const;
  ParamVec theta(Index row, Index variant) const;
  ParamVec final_theta(Index variant) const { return theta(rows() - 1, variant); }
};

// RNG stream ids used within one seed.
inline constexpr std::uint64_t kObservedStream = 1;
inline constexpr std::uint64_t kThetaInitStream = 2;
std::uint64_t hat_stream(Variant v) noexcept;
std::uint64_t tilde_stream(Variant v) noexcept;
std::uint64_t index_stream(Variant v) noexcept;

/// Observed data for one seed: the N-particle system at the true parameter.
ObservedPath simulate_for_seed(const ExperimentConfig& config, const Model& model, std::uint64_t seed);

/// Initial estimate for one seed; frozen coordinates start at the truth.
ParamVec draw_theta_init(const ExperimentConfig& config, std::uint64_t seed);

/// Runs every configured variant on one seed. All variants see the same
/// observed path and initial estimate; each has its own virtual noise.
/// Pass `observed` to reuse an already simulated path.
RunTrace run_seed(const ExperimentConfig& config, std::uint64_t seed, const ObservedPath* observed = nullptr);

/// One trace per configured seed, in seed order. Seeds run concurrently.
std::vector<RunTrace> run_experiment(const ExperimentConfig& config);

/// Root-mean-square over traces of (estimate - target), per coordinate.
/// Without a window the final iterate is used; with window w in (0, 1] the
/// estimate is the average over the last ceil(w * rows) recorded rows.
ParamVec l2_error(const std::vector<RunTrace>& traces, const ParamVec& target, Index variant,
                  std::optional<double> window = std::nullopt);

/// Reference value for errors per the config's target kind and N.
ParamVec resolve_target(const ExperimentConfig& config);

struct SweepRow {
  std::int64_t value;
  Variant variant;
  ParamVec error;
};

struct SweepSummary {
  std::string axis;
  std::vector<std::int64_t> values;
  std::vector<SweepRow> rows;                  // ordered by (value, variant)
  std::vector<std::vector<RunTrace>> traces;   // per axis value
  std::vector<ParamVec> targets;               // per axis value
};

/// Runs the config once per axis value and aggregates L2 errors.
SweepSummary sweep(const ExperimentConfig& config, std::string_view axis, const std::vector<std::int64_t>& values);

}  // namespace vpsgd
