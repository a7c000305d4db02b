#include "vpsgd/dynamics.hpp"

#include "vpsgd/errors.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

namespace vpsgd {

namespace {

std::atomic<std::uint64_t> g_stability_warnings{0};

void warn_unstable(const Model& model, double rate, double dt) {
  if (g_stability_warnings.fetch_add(1) == 0) {
    std::cerr << "warning: explicit Euler step for model '" << model.name() << "' is outside its stability region ("
              << "rate*dt = " << rate * dt << " >= 2)\n";
  }
}

void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("dt must be finite and > 0");
}

template <class K>
void ips_step_impl(const K& kernel, const Model& model, const double* th, const RowMatrix& x, double dt,
                   const RowMatrix& noise, RowMatrix& out, RowMatrix* increments) {
  constexpr int d = K::kDim;
  const Index n = x.rows();
  const double sqrt_dt = std::sqrt(dt);
  const Eigen::MatrixXd& sigma = model.sigma();
  out.resize(n, d);
  if (increments) increments->resize(n, d);
  double b[d];
  for (Index i = 0; i < n; ++i) {
    const double* xi = x.data() + i * d;
    detail::mean_kernel_drift(kernel, th, xi, x, b);
    const double* xi_noise = noise.data() + i * d;
    for (int l = 0; l < d; ++l) {
      double diffusion = 0.0;
      for (int m = 0; m < d; ++m) diffusion += sigma(l, m) * xi_noise[m];
      const double inc = b[l] * dt + diffusion * sqrt_dt;
      if (increments) (*increments)(i, l) = inc;
      const double next = xi[l] + inc;
      out(i, l) = model.wraps(l) ? wrap_angle(next) : next;
    }
  }
}

template <class K>
void tangent_step_impl(const K& kernel, const double* th, const RowMatrix& x, const TangentEnsemble& y, double dt,
                       TangentEnsemble& out) {
  constexpr int d = K::kDim;
  constexpr int p = K::kParams;
  const Index m = x.rows();
  const double count = static_cast<double>(m);
  double dth[p * d];
  double jx[d * d];
  double jy[d * d];
  for (Index i = 0; i < m; ++i) {
    const double* xi = x.data() + i * d;
    const double* yi = y.raw(i);
    double sum_dth[p * d] = {};
    double sum_jx[d * d] = {};
    double cross[p * d] = {};  // sum_j y_j . Jy(i, j)
    for (Index j = 0; j < m; ++j) {
      const double* xj = x.data() + j * d;
      const double* yj = y.raw(j);
      kernel.dtheta(th, xi, xj, dth);
      kernel.dx(th, xi, xj, jx);
      kernel.dy(th, xi, xj, jy);
      for (int q = 0; q < p * d; ++q) sum_dth[q] += dth[q];
      for (int q = 0; q < d * d; ++q) sum_jx[q] += jx[q];
      for (int a = 0; a < p; ++a) {
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int k = 0; k < d; ++k) s += yj[a * d + k] * jy[k * d + l];
          cross[a * d + l] += s;
        }
      }
    }
    double* oi = out.raw(i);
    for (int a = 0; a < p; ++a) {
      for (int l = 0; l < d; ++l) {
        double self = 0.0;
        for (int k = 0; k < d; ++k) self += yi[a * d + k] * sum_jx[k * d + l];
        const double rate = (sum_dth[a * d + l] + self + cross[a * d + l]) / count;
        oi[a * d + l] = yi[a * d + l] + rate * dt;
      }
    }
  }
}

}  // namespace

TruthSchedule::TruthSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw UsageError("truth schedule: at least one segment required");
  std::int64_t prev = 0;
  const Index p = segments_.front().theta.size();
  for (const auto& s : segments_) {
    if (s.until_step <= prev) throw UsageError("truth schedule: until_step values must be positive and increasing");
    if (s.theta.size() != p) throw UsageError("truth schedule: inconsistent parameter lengths");
    if (!s.theta.allFinite()) throw NumericInputError("truth schedule: non-finite theta");
    prev = s.until_step;
  }
}

TruthSchedule TruthSchedule::constant(ParamVec theta, std::int64_t until_step) {
  return TruthSchedule({Segment{until_step, std::move(theta)}});
}

const ParamVec& TruthSchedule::at(std::int64_t step) const {
  for (const auto& s : segments_) {
    if (step < s.until_step) return s.theta;
  }
  throw UsageError("truth schedule has no segment for step " + std::to_string(step));
}

void TruthSchedule::check_covers(std::int64_t steps) const {
  if (segments_.empty() || segments_.back().until_step < steps) {
    throw UsageError("truth schedule does not cover all " + std::to_string(steps) + " steps");
  }
}

bool operator==(const TruthSchedule& a, const TruthSchedule& b) {
  if (a.segments_.size() != b.segments_.size()) return false;
  for (std::size_t i = 0; i < a.segments_.size(); ++i) {
    const auto& x = a.segments_[i];
    const auto& y = b.segments_[i];
    if (x.until_step != y.until_step || x.theta.size() != y.theta.size() || x.theta != y.theta) return false;
  }
  return true;
}

InitialLaw InitialLaw::standard_gaussian(Index d) {
  InitialLaw law;
  law.kind = Kind::gaussian;
  law.a = StateVec::Zero(d);
  law.b = StateVec::Ones(d);
  return law;
}

bool operator==(const InitialLaw& x, const InitialLaw& y) {
  auto same = [](const auto& u, const auto& v) {
    return u.rows() == v.rows() && u.cols() == v.cols() && u == v;
  };
  return x.kind == y.kind && same(x.a, y.a) && same(x.b, y.b) && same(x.positions, y.positions);
}

Ensemble sample_initial(const Model& model, const InitialLaw& law, Index count, RngStream& rng) {
  const Index d = model.state_dim();
  if (count < 1) throw UsageError("initial ensemble needs at least one particle");
  Ensemble e(count, d);
  switch (law.kind) {
    case InitialLaw::Kind::gaussian:
      if (law.a.size() != d || law.b.size() != d) throw UsageError("initial law: mean/sd length must equal d");
      for (Index i = 0; i < count; ++i)
        for (Index l = 0; l < d; ++l) e.positions()(i, l) = law.a[l] + law.b[l] * rng.gaussian();
      break;
    case InitialLaw::Kind::uniform:
      if (law.a.size() != d || law.b.size() != d) throw UsageError("initial law: bounds length must equal d");
      for (Index i = 0; i < count; ++i)
        for (Index l = 0; l < d; ++l) e.positions()(i, l) = rng.uniform(law.a[l], law.b[l]);
      break;
    case InitialLaw::Kind::explicit_positions:
      if (law.positions.rows() < count || law.positions.cols() != d) {
        throw UsageError("initial law: explicit positions need at least count rows of length d");
      }
      e.positions() = law.positions.topRows(count);
      break;
  }
  for (Index i = 0; i < count; ++i)
    for (Index l = 0; l < d; ++l)
      if (model.wraps(l)) e.positions()(i, l) = wrap_angle(e.positions()(i, l));
  return e;
}

bool euler_step_is_stable(const Model& model, const ParamVec& theta, double dt) {
  const double rate = model.visit([&](const auto& k) { return k.stiffness(theta.data()); });
  return rate * dt < 2.0;
}

std::uint64_t stability_warning_count() noexcept { return g_stability_warnings.load(); }

Ensemble euler_ips_step(const Model& model, const ParamVec& theta, const Ensemble& ensemble, double dt,
                        const RowMatrix& noise, RowMatrix* increments) {
  check_dt(dt);
  validate_theta(model, theta);
  if (ensemble.empty() || ensemble.dim() != model.state_dim()) throw UsageError("euler_ips_step: bad ensemble shape");
  if (noise.rows() != ensemble.size() || noise.cols() != model.state_dim()) {
    throw UsageError("euler_ips_step: noise must be count x d");
  }
  const double rate = model.visit([&](const auto& k) { return k.stiffness(theta.data()); });
  if (rate * dt >= 2.0) warn_unstable(model, rate, dt);
  RowMatrix out;
  model.visit([&](const auto& k) {
    ips_step_impl(k, model, theta.data(), ensemble.positions(), dt, noise, out, increments);
  });
  return Ensemble(std::move(out));
}

Ensemble euler_ips_step(const Model& model, const ParamVec& theta, const Ensemble& ensemble, double dt,
                        RngStream& rng, RowMatrix* increments) {
  RowMatrix noise(ensemble.size(), model.state_dim());
  rng.fill_gaussian(noise);
  return euler_ips_step(model, theta, ensemble, dt, noise, increments);
}

TangentEnsemble euler_tangent_step(const Model& model, const ParamVec& theta, const Ensemble& hat,
                                   const TangentEnsemble& tangent, double dt) {
  check_dt(dt);
  validate_theta(model, theta);
  if (hat.empty() || hat.dim() != model.state_dim() || tangent.size() != hat.size() ||
      tangent.param_dim() != model.param_dim() || tangent.dim() != model.state_dim()) {
    throw UsageError("euler_tangent_step: tangent ensemble shape does not match positions/model");
  }
  TangentEnsemble out(tangent.size(), tangent.param_dim(), tangent.dim());
  model.visit([&](const auto& k) { tangent_step_impl(k, theta.data(), hat.positions(), tangent, dt, out); });
  return out;
}

ObservedPath simulate_observed(const Model& model, const TruthSchedule& schedule, Ensemble initial,
                               std::int64_t steps, double dt, RngStream& rng, Index observed) {
  check_dt(dt);
  if (steps < 0) throw UsageError("steps must be >= 0");
  if (initial.empty()) throw UsageError("N must be >= 1");
  if (observed < 0 || observed >= initial.size()) throw UsageError("observed particle index out of range");
  schedule.check_covers(steps);
  const Index d = model.state_dim();
  ObservedPath path;
  path.positions.resize(steps + 1, d);
  path.increments.resize(steps, d);
  path.positions.row(0) = initial.positions().row(observed);
  Ensemble current = std::move(initial);
  RowMatrix inc;
  for (std::int64_t k = 0; k < steps; ++k) {
    current = euler_ips_step(model, schedule.at(k), current, dt, rng, &inc);
    path.positions.row(k + 1) = current.positions().row(observed);
    path.increments.row(k) = inc.row(observed);
  }
  return path;
}

ObservedPath simulate_observed(const Model& model, const TruthSchedule& schedule, const InitialLaw& law, Index n,
                               std::int64_t steps, double dt, RngStream& rng, Index observed) {
  if (n < 1) throw UsageError("N must be >= 1");
  return simulate_observed(model, schedule, sample_initial(model, law, n, rng), steps, dt, rng, observed);
}

}  // namespace vpsgd
