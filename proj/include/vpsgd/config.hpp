#pragma once

#include "vpsgd/dynamics.hpp"
#include "vpsgd/estimators.hpp"
#include "vpsgd/models.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vpsgd {

/// How the initial parameter estimate is chosen for each seed.
struct ThetaInit {
  enum class Kind { uniform, explicit_value };
  Kind kind = Kind::explicit_value;
  ParamVec lower;
  ParamVec upper;
  ParamVec value;

  friend bool operator==(const ThetaInit& a, const ThetaInit& b);
};

/// Reference value for L2 errors: the true parameter at the final step, the
/// finite-N pseudo-true value (quadratic model only), or an explicit vector.
struct Target {
  enum class Kind { truth, pseudo, explicit_value };
  Kind kind = Kind::truth;
  ParamVec value;

  friend bool operator==(const Target& a, const Target& b);
};

struct SweepSpec {
  std::string axis;  // "N" or "M"
  std::vector<std::int64_t> values;
  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct ExperimentConfig {
  std::string name;
  std::string model = "quadratic";
  ModelOptions model_options;
  Index n = 0;
  Index m = 0;
  double dt = 0.0;
  std::int64_t steps = 0;
  TruthSchedule truth;
  InitialLaw initial_law;
  ThetaInit theta_init;
  FreeMask mask;
  std::vector<Variant> variants{Variant::averaged, Variant::particlewise};
  LearningRate rate;
  ClockConvention clock = ClockConvention::iteration;
  IndexPolicy index_policy = IndexPolicy::fixed;
  Index j = 0;
  Index k = 0;
  std::optional<Box> projection;
  std::vector<std::uint64_t> seeds{0};
  std::int64_t record_stride = 1;
  std::string output;
  Target target;
  std::optional<double> l2_window;
  std::optional<SweepSpec> sweep;

  Model make_model() const;
  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

/// Parses and validates a JSON config. `source` labels diagnostics.
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a of the canonical serialisation.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Throws UsageError naming the offending field.
void validate_config(const ExperimentConfig& config);

/// Shrinks steps (and truth switch points) by `scale` and keeps the first
/// ceil(scale * seeds) seeds. scale must lie in (0, 1].
ExperimentConfig scale_config(const ExperimentConfig& config, double scale);

}  // namespace vpsgd
