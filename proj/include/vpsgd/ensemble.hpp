#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace vpsgd {

using Index = Eigen::Index;
using ParamVec = Eigen::VectorXd;
using StateVec = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A cloud of particles, one row per particle (count x d). Stands in for the
/// empirical measure of an interacting particle system.
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(Index count, Index dim) : positions_(RowMatrix::Zero(count, dim)) {}
  explicit Ensemble(RowMatrix positions) : positions_(std::move(positions)) {}

  Index size() const noexcept { return positions_.rows(); }
  Index dim() const noexcept { return positions_.cols(); }
  bool empty() const noexcept { return positions_.rows() == 0; }

  const double* particle(Index i) const noexcept { return positions_.data() + i * dim(); }
  double* particle(Index i) noexcept { return positions_.data() + i * dim(); }

  const RowMatrix& positions() const noexcept { return positions_; }
  RowMatrix& positions() noexcept { return positions_; }

  bool all_finite() const { return positions_.allFinite(); }

  friend bool operator==(const Ensemble& a, const Ensemble& b) {
    return a.positions_.rows() == b.positions_.rows() && a.positions_.cols() == b.positions_.cols() &&
           a.positions_ == b.positions_;
  }

 private:
  RowMatrix positions_;
};

/// Parameter sensitivities of an ensemble: particle i carries a p x d block
/// y_i = d x_i / d theta, stored row-major as row i of an M x (p*d) matrix.
/// Entry (a, l) of a block is d x_{i,l} / d theta_a.
class TangentEnsemble {
 public:
  using Block = Eigen::Map<RowMatrix>;
  using ConstBlock = Eigen::Map<const RowMatrix>;

  TangentEnsemble() = default;
  TangentEnsemble(Index count, Index param_dim, Index dim)
      : p_(param_dim), d_(dim), data_(RowMatrix::Zero(count, param_dim * dim)) {}

  Index size() const noexcept { return data_.rows(); }
  Index param_dim() const noexcept { return p_; }
  Index dim() const noexcept { return d_; }

  const double* raw(Index i) const noexcept { return data_.data() + i * p_ * d_; }
  double* raw(Index i) noexcept { return data_.data() + i * p_ * d_; }

  ConstBlock block(Index i) const { return ConstBlock(raw(i), p_, d_); }
  Block block(Index i) { return Block(raw(i), p_, d_); }

  const RowMatrix& data() const noexcept { return data_; }
  RowMatrix& data() noexcept { return data_; }

  bool all_finite() const { return data_.allFinite(); }

  friend bool operator==(const TangentEnsemble& a, const TangentEnsemble& b) {
    return a.p_ == b.p_ && a.d_ == b.d_ && a.data_.rows() == b.data_.rows() && a.data_ == b.data_;
  }

 private:
  Index p_ = 0;
  Index d_ = 0;
  RowMatrix data_;
};

}  // namespace vpsgd
