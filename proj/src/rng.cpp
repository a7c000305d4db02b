#include "vpsgd/rng.hpp"

#include "vpsgd/errors.hpp"

namespace vpsgd {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream_id), hi(stream_id), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::gaussian() {
  ++counter_;
  return normal_(engine_);
}

double RngStream::uniform(double lo, double hi) {
  ++counter_;
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

Index RngStream::index_below(Index n) {
  if (n <= 0) throw UsageError("index_below: n must be positive");
  ++counter_;
  return static_cast<Index>(std::uniform_int_distribution<std::int64_t>(0, n - 1)(engine_));
}

void RngStream::fill_gaussian(RowMatrix& out) {
  double* p = out.data();
  const Index n = out.size();
  for (Index i = 0; i < n; ++i) p[i] = normal_(engine_);
  counter_ += static_cast<std::uint64_t>(n);
}

}  // namespace vpsgd
