#include "vpsgd/errors.hpp"
#include "vpsgd/models.hpp"
#include "vpsgd/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace vpsgd;

namespace {

ParamVec vec(std::initializer_list<double> v) {
  ParamVec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

double rel_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1.0});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

std::vector<Model> all_models() { return {Model::quadratic(), Model::fitzhugh_nagumo(), Model::kuramoto()}; }

}  // namespace

TEST(Drift, QuadraticHandValue) {
  const Model m = Model::quadratic();
  EXPECT_DOUBLE_EQ(drift_kernel(m, vec({1.2, 0.5}), vec({1.0}), vec({0.0}))[0], -1.7);
}

TEST(Drift, DiagonalDropsInteraction) {
  EXPECT_DOUBLE_EQ(drift_kernel(Model::quadratic(), vec({1.2, 0.5}), vec({0.8}), vec({0.8}))[0], -1.2 * 0.8);
  EXPECT_EQ(drift_kernel(Model::kuramoto(), vec({1.5}), vec({0.3}), vec({0.3}))[0], 0.0);
}

TEST(Drift, FitzHughNagumoHandValue) {
  const auto b = drift_kernel(Model::fitzhugh_nagumo(), vec({0.9, 0.4, 0.1, 1.0}), vec({1.0, 0.0}), vec({0.0, 0.0}));
  EXPECT_NEAR(b[0], 0.2, 1e-15);
  EXPECT_NEAR(b[1], 1.1, 1e-15);
}

TEST(Drift, RejectsBadInput) {
  const Model m = Model::quadratic();
  EXPECT_THROW(drift_kernel(m, vec({1.0}), vec({1.0}), vec({0.0})), UsageError);
  EXPECT_THROW(drift_kernel(m, vec({1.0, 2.0}), vec({1.0, 2.0}), vec({0.0})), UsageError);
  EXPECT_THROW(drift_kernel(m, vec({NAN, 2.0}), vec({1.0}), vec({0.0})), NumericInputError);
  EXPECT_THROW(drift_kernel(m, vec({1.0, 2.0}), vec({INFINITY}), vec({0.0})), NumericInputError);
}

TEST(Jacobians, QuadraticHandValues) {
  const Model m = Model::quadratic();
  const auto th = vec({1.2, 0.5});
  const auto g = drift_kernel_dtheta(m, th, vec({1.0}), vec({0.0}));
  ASSERT_EQ(g.rows(), 2);
  ASSERT_EQ(g.cols(), 1);
  EXPECT_EQ(g(0, 0), -1.0);
  EXPECT_EQ(g(1, 0), -1.0);
  for (double x : {-3.0, 0.0, 2.5}) {
    const double dx = drift_kernel_dx(m, th, vec({x}), vec({0.4}))(0, 0);
    const double dy = drift_kernel_dy(m, th, vec({x}), vec({0.4}))(0, 0);
    EXPECT_DOUBLE_EQ(dx, -1.7);
    EXPECT_DOUBLE_EQ(dy, 0.5);
    EXPECT_DOUBLE_EQ(dx + dy, -1.2);
  }
}

TEST(Jacobians, KuramotoHandValues) {
  const Model m = Model::kuramoto();
  const double y = 0.2;
  const double x = y + std::numbers::pi / 3;
  EXPECT_NEAR(drift_kernel_dy(m, vec({1.5}), vec({x}), vec({y}))(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(drift_kernel_dx(m, vec({1.5}), vec({x}), vec({y}))(0, 0), -0.75, 1e-15);
  EXPECT_EQ(drift_kernel_dtheta(m, vec({1.5}), vec({y}), vec({y}))(0, 0), 0.0);
}

TEST(Jacobians, QuadraticThetaMatchesCentralDifference) {
  const Model m = Model::quadratic();
  const auto th = vec({1.2, 0.5});
  const auto x = vec({0.7});
  const auto y = vec({-0.3});
  const auto g = drift_kernel_dtheta(m, th, x, y);
  constexpr double h = 1e-6;
  for (Index a = 0; a < 2; ++a) {
    ParamVec up = th, dn = th;
    up[a] += h;
    dn[a] -= h;
    const double fd = (drift_kernel(m, up, x, y)[0] - drift_kernel(m, dn, x, y)[0]) / (2 * h);
    EXPECT_NEAR(fd, g(a, 0), 1e-6 * std::abs(g(a, 0)));
  }
}

// Central differences of drift_kernel against every analytic Jacobian at
// 100 random points per model.
TEST(Jacobians, MatchFiniteDifferencesAtRandomPoints) {
  constexpr double h = 1e-6;
  RngStream rng(11, 3);
  for (const auto& m : all_models()) {
    const Index d = m.state_dim(), p = m.param_dim();
    for (int trial = 0; trial < 100; ++trial) {
      ParamVec th(p);
      StateVec x(d), y(d);
      for (Index a = 0; a < p; ++a) th[a] = rng.uniform(-2.0, 2.0);
      for (Index l = 0; l < d; ++l) {
        x[l] = rng.uniform(-2.0, 2.0);
        y[l] = rng.uniform(-2.0, 2.0);
      }
      Eigen::MatrixXd fd_th(p, d), fd_x(d, d), fd_y(d, d);
      for (Index a = 0; a < p; ++a) {
        ParamVec up = th, dn = th;
        up[a] += h;
        dn[a] -= h;
        fd_th.row(a) = ((drift_kernel(m, up, x, y) - drift_kernel(m, dn, x, y)) / (2 * h)).transpose();
      }
      for (Index k = 0; k < d; ++k) {
        StateVec xu = x, xd = x, yu = y, yd = y;
        xu[k] += h;
        xd[k] -= h;
        yu[k] += h;
        yd[k] -= h;
        fd_x.row(k) = ((drift_kernel(m, th, xu, y) - drift_kernel(m, th, xd, y)) / (2 * h)).transpose();
        fd_y.row(k) = ((drift_kernel(m, th, x, yu) - drift_kernel(m, th, x, yd)) / (2 * h)).transpose();
      }
      EXPECT_LT(rel_gap(fd_th, drift_kernel_dtheta(m, th, x, y)), 1e-5) << m.name();
      EXPECT_LT(rel_gap(fd_x, drift_kernel_dx(m, th, x, y)), 1e-5) << m.name();
      EXPECT_LT(rel_gap(fd_y, drift_kernel_dy(m, th, x, y)), 1e-5) << m.name();
    }
  }
}

TEST(MeanDrift, HandValues) {
  const Model m = Model::quadratic();
  const auto th = vec({1.2, 0.5});
  RowMatrix pos(2, 1);
  pos << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(mean_drift(m, th, vec({1.0}), Ensemble(pos))[0], -1.2);

  RowMatrix single(1, 1);
  single << 0.6;
  EXPECT_DOUBLE_EQ(mean_drift(m, th, vec({0.6}), Ensemble(single))[0], -1.2 * 0.6);

  RowMatrix copies = RowMatrix::Constant(7, 1, -0.4);
  EXPECT_NEAR(mean_drift(m, th, vec({0.9}), Ensemble(copies))[0], drift_kernel(m, th, vec({0.9}), vec({-0.4}))[0],
              1e-15);
}

TEST(MeanDrift, EmptyEnsembleRejected) {
  EXPECT_THROW(mean_drift(Model::quadratic(), vec({1.0, 1.0}), vec({0.0}), Ensemble(0, 1)), UsageError);
}

TEST(MeanDrift, PermutationChangesAtMostRoundoff) {
  RngStream rng(5, 5);
  for (const auto& m : all_models()) {
    const Index d = m.state_dim();
    RowMatrix pos(50, d);
    rng.fill_gaussian(pos);
    ParamVec th = ParamVec::Constant(m.param_dim(), 0.7);
    StateVec x = StateVec::Constant(d, 0.3);
    RowMatrix rev = pos.colwise().reverse();
    const auto a = mean_drift(m, th, x, Ensemble(pos));
    const auto b = mean_drift(m, th, x, Ensemble(rev));
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) << m.name();
  }
}

TEST(Kuramoto, KernelIsPeriodic) {
  const Model m = Model::kuramoto();
  const double two_pi = 2 * std::numbers::pi;
  RngStream rng(2, 2);
  for (int i = 0; i < 50; ++i) {
    const double x = rng.uniform(-3.0, 3.0), y = rng.uniform(-3.0, 3.0);
    const double a = drift_kernel(m, vec({1.3}), vec({x}), vec({y}))[0];
    const double b = drift_kernel(m, vec({1.3}), vec({x + two_pi}), vec({y}))[0];
    EXPECT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(Wrap, Conventions) {
  const double pi = std::numbers::pi;
  EXPECT_EQ(wrap_state(Model::quadratic(), vec({5.0}))[0], 5.0);
  EXPECT_NEAR(wrap_state(Model::kuramoto(), vec({1.5 * pi}))[0], -0.5 * pi, 1e-15);
  EXPECT_EQ(wrap_state(Model::kuramoto(), vec({-pi}))[0], -pi);
  EXPECT_EQ(wrap_angle(pi), -pi);
  for (double a : {-100.0, -7.0, -3.2, 0.0, 3.2, 7.0, 1e6}) {
    const double w = wrap_angle(a);
    EXPECT_GE(w, -pi);
    EXPECT_LT(w, pi);
    EXPECT_EQ(wrap_angle(w), w);
  }
}

TEST(ModelSpec, NamesAndWeights) {
  EXPECT_EQ(Model::from_name("fitzhugh-nagumo").param_dim(), 4);
  EXPECT_EQ(Model::from_name("kuramoto").state_dim(), 1);
  EXPECT_THROW(Model::from_name("lorenz"), UsageError);

  const Model q = Model::from_name("quadratic", {2.0, std::nullopt});
  EXPECT_DOUBLE_EQ(q.weight()(0, 0), 0.25);

  const Model f = Model::fitzhugh_nagumo(0.7);
  EXPECT_TRUE(f.weight().isIdentity());
  EXPECT_EQ(f.sigma()(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(f.sigma()(0, 0), 0.7);
  EXPECT_THROW(Model::fitzhugh_nagumo(1.0, WeightMode::likelihood), UsageError);

  EXPECT_TRUE(Model::kuramoto().wraps(0));
  EXPECT_FALSE(Model::quadratic().any_torus());
  EXPECT_EQ(weight_mode_from_string(to_string(WeightMode::identity)), WeightMode::identity);
}
