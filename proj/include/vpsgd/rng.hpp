#pragma once

#include "vpsgd/ensemble.hpp"

#include <cstdint>
#include <random>

namespace vpsgd {

/// Reproducible source of Brownian increments. A (seed, stream id) pair
/// fully determines the sequence; distinct pairs are seeded through
/// std::seed_seq so their engine states are unrelated.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  double gaussian();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  Index index_below(Index n);

  /// Fills `out` with standard normals, row by row (particle-major).
  void fill_gaussian(RowMatrix& out);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  /// Number of variates drawn so far.
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace vpsgd
