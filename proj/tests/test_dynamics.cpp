#include "vpsgd/dynamics.hpp"
#include "vpsgd/errors.hpp"
#include "vpsgd/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace vpsgd;

namespace {

ParamVec vec(std::initializer_list<double> v) {
  ParamVec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Ensemble column(std::initializer_list<double> v) {
  RowMatrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return Ensemble(std::move(m));
}

}  // namespace

TEST(IpsStep, SingleParticleNoNoise) {
  const Model m = Model::quadratic();
  const auto out = euler_ips_step(m, vec({1.2, 0.5}), column({1.0}), 0.1, RowMatrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(out.positions()(0, 0), 0.88);
}

TEST(IpsStep, TwoParticlesSynchronous) {
  const Model m = Model::quadratic();
  RowMatrix inc;
  const auto out = euler_ips_step(m, vec({1.2, 0.5}), column({1.0, 0.0}), 0.1, RowMatrix::Zero(2, 1), &inc);
  EXPECT_NEAR(out.positions()(0, 0), 0.855, 1e-15);
  // particle 2 sees the pre-step particle 1: -0.5 * mean(0 - 1, 0 - 0) = 0.25
  EXPECT_NEAR(out.positions()(1, 0), 0.025, 1e-15);
  EXPECT_NEAR(inc(0, 0), -0.145, 1e-15);
}

TEST(IpsStep, ZeroDriftZeroNoiseIsIdentity) {
  RngStream rng(1, 1);
  for (const Model& m : {Model::quadratic(), Model::fitzhugh_nagumo(), Model::kuramoto()}) {
    if (m.name() == "fitzhugh-nagumo") continue;  // has a constant-free but state-driven recovery drift
    RowMatrix pos(4, m.state_dim());
    rng.fill_gaussian(pos);
    for (Index i = 0; i < pos.rows(); ++i) pos(i, 0) = wrap_angle(pos(i, 0));
    const Ensemble e(pos);
    const auto out = euler_ips_step(m, ParamVec::Zero(m.param_dim()), e, 0.1, RowMatrix::Zero(4, m.state_dim()));
    EXPECT_EQ(out, e) << m.name();
  }
}

TEST(IpsStep, RejectsBadArguments) {
  const Model m = Model::quadratic();
  EXPECT_THROW(euler_ips_step(m, vec({1, 1}), column({1.0}), 0.0, RowMatrix::Zero(1, 1)), UsageError);
  EXPECT_THROW(euler_ips_step(m, vec({1, 1}), column({1.0}), -0.1, RowMatrix::Zero(1, 1)), UsageError);
  EXPECT_THROW(euler_ips_step(m, vec({1, 1}), column({1.0}), 0.1, RowMatrix::Zero(2, 1)), UsageError);
}

TEST(IpsStep, KuramotoStaysOnCircleAndKeepsRawIncrement) {
  const Model m = Model::kuramoto();
  RowMatrix noise(1, 1);
  noise << 10.0;
  RowMatrix inc;
  const auto out = euler_ips_step(m, vec({1.0}), column({3.0}), 0.1, noise, &inc);
  const double raw = 10.0 * std::sqrt(0.1);
  EXPECT_NEAR(inc(0, 0), raw, 1e-15);
  EXPECT_NEAR(out.positions()(0, 0), wrap_angle(3.0 + raw), 1e-15);
  EXPECT_GE(out.positions()(0, 0), -std::numbers::pi);
  EXPECT_LT(out.positions()(0, 0), std::numbers::pi);
}

TEST(IpsStep, FitzHughNagumoNoiseOnlyOnVoltage) {
  const Model m = Model::fitzhugh_nagumo(1.0);
  RowMatrix pos = RowMatrix::Zero(1, 2);
  RowMatrix noise(1, 2);
  noise << 1.0, 1.0;
  const auto out = euler_ips_step(m, vec({0.9, 0.4, 0.0, 1.0}), Ensemble(pos), 0.01, noise);
  EXPECT_NEAR(out.positions()(0, 0), 0.1, 1e-15);
  EXPECT_EQ(out.positions()(0, 1), 0.0);
}

TEST(IpsStep, StabilityGuardWarnsOnce) {
  const Model m = Model::quadratic();
  EXPECT_TRUE(euler_step_is_stable(m, vec({1.2, 0.5}), 0.1));
  EXPECT_FALSE(euler_step_is_stable(m, vec({15.0, 10.0}), 0.1));
  const auto before = stability_warning_count();
  euler_ips_step(m, vec({15.0, 10.0}), column({1.0}), 0.1, RowMatrix::Zero(1, 1));
  EXPECT_EQ(stability_warning_count(), before + 1);
}

TEST(TangentStep, SingleParticleHandValue) {
  const Model m = Model::quadratic();
  const TangentEnsemble zero(1, 2, 1);
  const auto out = euler_tangent_step(m, vec({1.2, 0.5}), column({2.0}), zero, 0.1);
  EXPECT_NEAR(out.block(0)(0, 0), -0.2, 1e-15);
  EXPECT_EQ(out.block(0)(1, 0), 0.0);
}

TEST(TangentStep, HomogeneousStaysZero) {
  // every particle at the same point makes d b / d theta vanish for Kuramoto
  const Model m = Model::kuramoto();
  TangentEnsemble y(3, 1, 1);
  Ensemble hat = column({0.4, 0.4, 0.4});
  for (int s = 0; s < 5; ++s) y = euler_tangent_step(m, vec({1.5}), hat, y, 0.1);
  EXPECT_EQ(y.data().cwiseAbs().maxCoeff(), 0.0);
}

TEST(TangentStep, ShapeMismatchRejected) {
  EXPECT_THROW(euler_tangent_step(Model::quadratic(), vec({1, 1}), column({0.0, 1.0}), TangentEnsemble(3, 2, 1), 0.1),
               UsageError);
  EXPECT_THROW(euler_tangent_step(Model::quadratic(), vec({1, 1}), column({0.0}), TangentEnsemble(1, 1, 1), 0.1),
               UsageError);
}

TEST(TangentStep, TwoStepsMatchFiniteDifferences) {
  const Model m = Model::quadratic();
  const ParamVec th = vec({1.2, 0.5});
  const Ensemble x0 = column({0.3, -1.1});
  RowMatrix n1(2, 1), n2(2, 1);
  n1 << 0.5, -0.2;
  n2 << -1.0, 0.7;
  auto run = [&](const ParamVec& t) {
    return euler_ips_step(m, t, euler_ips_step(m, t, x0, 0.1, n1), 0.1, n2);
  };
  TangentEnsemble y(2, 2, 1);
  Ensemble x = x0;
  y = euler_tangent_step(m, th, x, y, 0.1);
  x = euler_ips_step(m, th, x, 0.1, n1);
  y = euler_tangent_step(m, th, x, y, 0.1);
  constexpr double eps = 1e-6;
  for (Index a = 0; a < 2; ++a) {
    ParamVec up = th, dn = th;
    up[a] += eps;
    dn[a] -= eps;
    const RowMatrix fd = (run(up).positions() - run(dn).positions()) / (2 * eps);
    for (Index i = 0; i < 2; ++i) EXPECT_NEAR(fd(i, 0), y.block(i)(a, 0), 1e-5 * std::abs(y.block(i)(a, 0)));
  }
}

TEST(TangentStep, FiniteDifferenceOracleForEveryModel) {
  EXPECT_LE(fd_tangent_check(Model::quadratic(), vec({1.2, 0.5}), 3, 0.05, 200, 1e-5, 4).rel_error, 1e-3);
  EXPECT_LE(fd_tangent_check(Model::kuramoto(), vec({1.5}), 3, 0.05, 200, 1e-5, 4).rel_error, 1e-3);
  EXPECT_LE(fd_tangent_check(Model::fitzhugh_nagumo(), vec({0.9, 0.4, 0.1, 1.0}), 3, 0.05, 200, 1e-5, 4).rel_error,
            1e-3);
}

TEST(Observed, DeterministicDecay) {
  const Model m = Model::quadratic(0.0, WeightMode::identity);
  RngStream rng(0, 1);
  const auto path = simulate_observed(m, TruthSchedule::constant(vec({1.0, 0.0}), 2), column({1.0}), 2, 0.1, rng);
  ASSERT_EQ(path.positions.rows(), 3);
  EXPECT_DOUBLE_EQ(path.positions(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(path.positions(1, 0), 0.9);
  EXPECT_DOUBLE_EQ(path.positions(2, 0), 0.81);
  EXPECT_DOUBLE_EQ(path.increments(1, 0), 0.81 - 0.9);
}

TEST(Observed, MatchesRepeatedSteps) {
  const Model m = Model::quadratic();
  const ParamVec th = vec({1.2, 0.5});
  RngStream init(3, 0);
  const Ensemble x0 = sample_initial(m, InitialLaw::standard_gaussian(1), 5, init);
  RngStream a(3, 1), b(3, 1);
  const auto path = simulate_observed(m, TruthSchedule::constant(th, 20), x0, 20, 0.1, a, 2);
  Ensemble x = x0;
  for (int k = 0; k < 20; ++k) {
    const Ensemble next = euler_ips_step(m, th, x, 0.1, b);
    EXPECT_NEAR(path.increments(k, 0), next.positions()(2, 0) - x.positions()(2, 0), 1e-15);
    x = next;
    EXPECT_EQ(path.positions(k + 1, 0), x.positions()(2, 0));
  }
}

TEST(Observed, ScheduleSwitchesAndGapsRejected) {
  const TruthSchedule s({{5000, vec({1.5})}, {10000, vec({0.2})}});
  EXPECT_EQ(s.at(0)[0], 1.5);
  EXPECT_EQ(s.at(4999)[0], 1.5);
  EXPECT_EQ(s.at(5000)[0], 0.2);
  EXPECT_EQ(s.at(9999)[0], 0.2);
  EXPECT_NO_THROW(s.check_covers(10000));
  EXPECT_THROW(s.check_covers(10001), UsageError);
  RngStream rng(0, 0);
  EXPECT_THROW(simulate_observed(Model::kuramoto(), s, column({0.0}), 10001, 0.1, rng), UsageError);
  EXPECT_THROW(TruthSchedule({{10, vec({1.0})}, {5, vec({2.0})}}), UsageError);
}

TEST(Observed, TimeVaryingTruthUsesSegmentPerStep) {
  const Model m = Model::quadratic(0.0, WeightMode::identity);
  const TruthSchedule s({{1, vec({1.0, 0.0})}, {2, vec({2.0, 0.0})}});
  RngStream rng(0, 0);
  const auto path = simulate_observed(m, s, column({1.0}), 2, 0.1, rng);
  EXPECT_DOUBLE_EQ(path.positions(1, 0), 0.9);
  EXPECT_DOUBLE_EQ(path.positions(2, 0), 0.9 * 0.8);
}

TEST(Rng, StreamsReproduceAndDiffer) {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  RowMatrix ma(10, 2), mb(10, 2), mc(10, 2), md(10, 2);
  a.fill_gaussian(ma);
  b.fill_gaussian(mb);
  c.fill_gaussian(mc);
  d.fill_gaussian(md);
  EXPECT_EQ(ma, mb);
  EXPECT_NE(ma, mc);
  EXPECT_NE(ma, md);
  EXPECT_EQ(a.counter(), 20u);
}

TEST(Rng, FillIsParticleMajor) {
  RngStream a(9, 1), b(9, 1);
  RowMatrix m(3, 2);
  a.fill_gaussian(m);
  for (Index i = 0; i < 3; ++i)
    for (Index l = 0; l < 2; ++l) EXPECT_EQ(m(i, l), b.gaussian());
}

TEST(InitialLaws, ShapesAndWrapping) {
  RngStream rng(1, 0);
  InitialLaw uni;
  uni.kind = InitialLaw::Kind::uniform;
  uni.a = vec({-10.0});
  uni.b = vec({10.0});
  const auto e = sample_initial(Model::kuramoto(), uni, 200, rng);
  EXPECT_EQ(e.size(), 200);
  EXPECT_GE(e.positions().minCoeff(), -std::numbers::pi);
  EXPECT_LT(e.positions().maxCoeff(), std::numbers::pi);

  InitialLaw fixed;
  fixed.kind = InitialLaw::Kind::explicit_positions;
  fixed.positions = RowMatrix::Constant(4, 1, 0.5);
  EXPECT_EQ(sample_initial(Model::quadratic(), fixed, 3, rng).size(), 3);
  EXPECT_THROW(sample_initial(Model::quadratic(), fixed, 5, rng), UsageError);
  EXPECT_THROW(sample_initial(Model::quadratic(), InitialLaw::standard_gaussian(1), 0, rng), UsageError);
}
