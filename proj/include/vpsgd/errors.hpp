#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpsgd {

/// Caller violated a precondition (bad dimensions, bad index, bad config field).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric input (state, parameter) was NaN or infinite.
class NumericInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The online parameter estimate (or the virtual state feeding it) left the
/// finite reals. Carries the step at which it happened and the last finite
/// estimate so callers can report or truncate.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::int64_t step, std::vector<double> last_theta)
      : std::runtime_error(what), step_(step), last_theta_(std::move(last_theta)) {}

  std::int64_t step() const noexcept { return step_; }
  const std::vector<double>& last_theta() const noexcept { return last_theta_; }

 private:
  std::int64_t step_;
  std::vector<double> last_theta_;
};

}  // namespace vpsgd
