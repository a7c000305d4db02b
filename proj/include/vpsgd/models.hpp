#pragma once

#include "vpsgd/ensemble.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vpsgd {

// Pair-drift kernels b(theta, x, y). All pointer arguments are contiguous:
// theta has p entries, x and y have d entries. Derivative outputs are
// row-major with the differentiation variable as the row index, so that a
// p x d tangent block right-multiplied by a d x d Jacobian gives p x d:
//   dtheta: out[a*d + l] = d b_l / d theta_a   (p x d)
//   dx:     out[k*d + l] = d b_l / d x_k       (d x d)
//   dy:     out[k*d + l] = d b_l / d y_k       (d x d)

/// b = -theta_1 x - theta_2 (x - y), one-dimensional.
struct QuadraticKernel {
  static constexpr int kDim = 1;
  static constexpr int kParams = 2;

  void drift(const double* th, const double* x, const double* y, double* out) const noexcept {
    out[0] = -th[0] * x[0] - th[1] * (x[0] - y[0]);
  }
  void dtheta(const double*, const double* x, const double* y, double* out) const noexcept {
    out[0] = -x[0];
    out[1] = -(x[0] - y[0]);
  }
  void dx(const double* th, const double*, const double*, double* out) const noexcept {
    out[0] = -(th[0] + th[1]);
  }
  void dy(const double* th, const double*, const double*, double* out) const noexcept { out[0] = th[1]; }

  // Largest relaxation rate of the linear drift; explicit Euler is
  // mean-square stable while rate * dt < 2.
  double stiffness(const double* th) const noexcept { return th[0] + th[1]; }
};

/// Voltage/recovery pair (v, w) with electrical coupling on the voltage:
///   b_1 = theta_1 (v - v^3/3 - w) - theta_2 (v - v')
///   b_2 = v + theta_3 - theta_4 w
struct FitzHughNagumoKernel {
  static constexpr int kDim = 2;
  static constexpr int kParams = 4;

  void drift(const double* th, const double* x, const double* y, double* out) const noexcept {
    const double v = x[0];
    const double w = x[1];
    out[0] = th[0] * (v - v * v * v / 3.0 - w) - th[1] * (v - y[0]);
    out[1] = v + th[2] - th[3] * w;
  }
  void dtheta(const double*, const double* x, const double* y, double* out) const noexcept {
    const double v = x[0];
    const double w = x[1];
    out[0] = v - v * v * v / 3.0 - w;
    out[1] = 0.0;
    out[2] = -(v - y[0]);
    out[3] = 0.0;
    out[4] = 0.0;
    out[5] = 1.0;
    out[6] = 0.0;
    out[7] = -w;
  }
  void dx(const double* th, const double* x, const double*, double* out) const noexcept {
    const double v = x[0];
    out[0] = th[0] * (1.0 - v * v) - th[1];
    out[1] = 1.0;
    out[2] = -th[0];
    out[3] = -th[3];
  }
  void dy(const double* th, const double*, const double*, double* out) const noexcept {
    out[0] = th[1];
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = 0.0;
  }
  double stiffness(const double*) const noexcept { return 0.0; }
};

/// b = -theta sin(x - y) on the circle.
struct KuramotoKernel {
  static constexpr int kDim = 1;
  static constexpr int kParams = 1;

  void drift(const double* th, const double* x, const double* y, double* out) const noexcept {
    out[0] = -th[0] * std::sin(x[0] - y[0]);
  }
  void dtheta(const double*, const double* x, const double* y, double* out) const noexcept {
    out[0] = -std::sin(x[0] - y[0]);
  }
  void dx(const double* th, const double* x, const double* y, double* out) const noexcept {
    out[0] = -th[0] * std::cos(x[0] - y[0]);
  }
  void dy(const double* th, const double* x, const double* y, double* out) const noexcept {
    out[0] = th[0] * std::cos(x[0] - y[0]);
  }
  double stiffness(const double*) const noexcept { return 0.0; }
};

using Kernel = std::variant<QuadraticKernel, FitzHughNagumoKernel, KuramotoKernel>;

/// How the gradient inner product is weighted: by the inverse diffusion
/// (likelihood) or by the identity (for degenerate noise).
enum class WeightMode { likelihood, identity };

struct ModelOptions {
  std::optional<double> sigma;
  std::optional<WeightMode> weight;
};

/// Immutable description of an interacting particle system
///   dx_i = (1/N) sum_j b(theta, x_i, x_j) dt + sigma dw_i.
class Model {
 public:
  static Model quadratic(double sigma = 1.0, WeightMode weight = WeightMode::likelihood);
  static Model fitzhugh_nagumo(double sigma = 1.0, WeightMode weight = WeightMode::identity);
  static Model kuramoto(double sigma = 1.0, WeightMode weight = WeightMode::likelihood);

  /// "quadratic" | "fitzhugh-nagumo" | "kuramoto".
  static Model from_name(std::string_view name, const ModelOptions& options = {});

  const std::string& name() const noexcept { return name_; }
  Index state_dim() const noexcept { return d_; }
  Index param_dim() const noexcept { return p_; }
  double sigma_scale() const noexcept { return sigma_scale_; }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  const Eigen::MatrixXd& weight() const noexcept { return weight_; }
  WeightMode weight_mode() const noexcept { return weight_mode_; }
  bool wraps(Index coord) const { return torus_[static_cast<std::size_t>(coord)]; }
  bool any_torus() const noexcept { return any_torus_; }
  const Kernel& kernel() const noexcept { return kernel_; }

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), kernel_);
  }

 private:
  Model(std::string name, Kernel kernel, Eigen::MatrixXd sigma, double sigma_scale, WeightMode mode,
        std::vector<bool> torus);

  std::string name_;
  Kernel kernel_;
  Index d_ = 0;
  Index p_ = 0;
  double sigma_scale_ = 0.0;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd weight_;
  WeightMode weight_mode_ = WeightMode::likelihood;
  std::vector<bool> torus_;
  bool any_torus_ = false;
};

std::string_view to_string(WeightMode mode);
WeightMode weight_mode_from_string(std::string_view s);

/// Maps an angle into [-pi, pi).
inline double wrap_angle(double a) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a >= -std::numbers::pi && a < std::numbers::pi) return a;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r < 0.0) r += two_pi;
  r -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  return r >= std::numbers::pi ? r - two_pi : r;
}

StateVec drift_kernel(const Model& model, const ParamVec& theta, const StateVec& x, const StateVec& y);
Eigen::MatrixXd drift_kernel_dtheta(const Model& model, const ParamVec& theta, const StateVec& x,
                                    const StateVec& y);
Eigen::MatrixXd drift_kernel_dx(const Model& model, const ParamVec& theta, const StateVec& x, const StateVec& y);
Eigen::MatrixXd drift_kernel_dy(const Model& model, const ParamVec& theta, const StateVec& x, const StateVec& y);

/// B(theta, x, mu) for mu the empirical measure of `ensemble`.
StateVec mean_drift(const Model& model, const ParamVec& theta, const StateVec& x, const Ensemble& ensemble);

StateVec wrap_state(const Model& model, const StateVec& x);

void validate_theta(const Model& model, const ParamVec& theta);

namespace detail {

// Unchecked mean of b(theta, x, y_j) over the rows of `ys`, written to out[0..d).
template <class K>
inline void mean_kernel_drift(const K& kernel, const double* th, const double* x, const RowMatrix& ys,
                              double* out) noexcept {
  constexpr int d = K::kDim;
  double acc[d] = {};
  double b[d];
  const Index n = ys.rows();
  const double* y = ys.data();
  for (Index j = 0; j < n; ++j, y += d) {
    kernel.drift(th, x, y, b);
    for (int l = 0; l < d; ++l) acc[l] += b[l];
  }
  for (int l = 0; l < d; ++l) out[l] = acc[l] / static_cast<double>(n);
}

}  // namespace detail

}  // namespace vpsgd
