#include "omlr/asym_em.hpp"
#include "omlr/datagen.hpp"
#include "omlr/errors.hpp"
#include "omlr/sym_em.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace omlr {
namespace {

Vec v1(double x) { return Vec::Constant(1, x); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

TEST(AsymStep, ScalarHandEvaluation) {
  const AsymState s = step(AsymState::init(v1(0.0), v1(1.0), Mat::Identity(1, 1), 1.0), v1(1.0), 2.0);
  EXPECT_NEAR(s.theta1[0], 1.0, 1e-15);
  EXPECT_NEAR(s.theta2[0], 1.464028, 1e-6);
  EXPECT_NEAR(s.P(0, 0), 0.5, 1e-15);
}

TEST(AsymStep, PostUpdateResidualAblation) {
  // m = y - theta1'^T phi = 1 with the updated theta1.
  const AsymState s = step(AsymState::init(v1(0.0), v1(1.0), Mat::Identity(1, 1), 1.0), v1(1.0), 2.0,
                           ResidualSource::post_update);
  EXPECT_NEAR(s.theta1[0], 1.0, 1e-15);
  EXPECT_NEAR(s.theta2[0], 1.0 + 0.5 * (std::tanh(1.0) - 1.0), 1e-15);
}

TEST(AsymStep, ZeroRegressorLeavesStateUnchanged) {
  Engine rng(1);
  const AsymState s0 =
      AsymState::init(testing::random_vec(rng, 3), testing::random_vec(rng, 3), testing::random_spd(rng, 3), 1.0);
  const AsymState s1 = step(s0, Vec::Zero(3), 3.0);
  EXPECT_EQ(s1.theta1, s0.theta1);
  EXPECT_EQ(s1.theta2, s0.theta2);
  EXPECT_EQ(s1.P, s0.P);
}

TEST(AsymState, InitRejectsZeroTheta2) {
  EXPECT_THROW(AsymState::init(Vec::Ones(2), Vec::Zero(2), Mat::Identity(2, 2), 1.0), ConfigError);
  EXPECT_NO_THROW(AsymState::init(Vec::Zero(2), Vec::Ones(2), Mat::Identity(2, 2), 1.0));
}

// Independent reference for the first step: theta1 is plain regularised least squares.
TEST(AsymStep, FirstStepIsRecursiveLeastSquares) {
  Engine rng(2);
  const Eigen::Index d = 3;
  const Vec theta10 = testing::random_vec(rng, d);
  const Mat p0 = testing::random_spd(rng, d);
  AsymState s = AsymState::init(theta10, testing::random_vec(rng, d), p0, 1.0);
  Mat info = p0.inverse();
  Vec rhs = info * theta10;
  for (int t = 0; t < 60; ++t) {
    const Vec phi = testing::random_vec(rng, d);
    const double y = testing::random_vec(rng, 1, 3.0)[0];
    info += phi * phi.transpose();
    rhs += phi * y;
    s = step(std::move(s), phi, y);
  }
  EXPECT_LE(testing::rel_error(s.theta1, info.ldlt().solve(rhs)), 1e-8);
}

TEST(AsymStep, SecondStepIsSymmetricEmOnResidual) {
  Engine rng(3);
  AsymState s = AsymState::init(testing::random_vec(rng, 2), testing::random_vec(rng, 2), Mat::Identity(2, 2), 0.7);
  for (int t = 0; t < 100; ++t) {
    const Vec phi = testing::random_vec(rng, 2);
    const double y = testing::random_vec(rng, 1, 2.0)[0];
    const double m = y - s.theta1.dot(phi);
    const SymState sym = step(SymState{s.theta2, s.P, s.sigma2, s.k}, phi, m);
    s = step(std::move(s), phi, y);
    ASSERT_LE((s.theta2 - sym.beta).norm(), 1e-13 * std::max(1.0, sym.beta.norm()));
    ASSERT_LE((s.P - sym.P).norm(), 1e-15);
  }
}

TEST(AsymStep, SymmetricNoiselessDataDrivesTheta1ToZero) {
  const Vec beta_star = v2(2.0, -1.0);
  ModelSpec m = make_symmetric_model(beta_star, 0.0, 0.5, RegressorProcess::iid_gaussian(Mat::Identity(2, 2)));
  StreamGenerator gen(m, 17);
  AsymState s = AsymState::init(v2(0.5, 0.5), v2(1.0, 1.0), Mat::Identity(2, 2), 1e-6);
  for (int t = 0; t < 20000; ++t) {
    const Observation o = gen.next();
    s = step(std::move(s), o.phi, o.y);
  }
  EXPECT_LE(s.theta1.norm(), 0.05);
  EXPECT_LE(std::min((s.theta2 - beta_star).norm(), (s.theta2 + beta_star).norm()), 0.05);
}

TEST(AsymStep, GainIsMonotone) {
  Engine rng(4);
  AsymState s = AsymState::init(Vec::Zero(3), Vec::Ones(3), 5.0 * Mat::Identity(3, 3), 1.0);
  for (int t = 0; t < 300; ++t) {
    const Mat before = s.P;
    s = step(std::move(s), testing::random_vec(rng, 3), testing::random_vec(rng, 1, 4.0)[0]);
    ASSERT_TRUE(is_spd(s.P));
    ASSERT_GE(min_eigenvalue(before - s.P), -1e-12);
  }
}

TEST(Outputs, Arithmetic) {
  const AsymState s = AsymState::init(v2(1, 2), v2(3, 4), Mat::Identity(2, 2), 1.0);
  const BetaPair b = outputs(s);
  EXPECT_EQ(b.beta1, v2(4, 6));
  EXPECT_EQ(b.beta2, v2(-2, -2));
}

TEST(Outputs, DegenerateMixture) {
  AsymState s{v2(1, 2), Vec::Zero(2), Mat::Identity(2, 2), 1.0, 0};
  const BetaPair b = outputs(s);
  EXPECT_EQ(b.beta1, s.theta1);
  EXPECT_EQ(b.beta2, s.theta1);
}

TEST(Outputs, RoundTripFromBetas) {
  const Vec b1 = (Vec(3) << 1, 15, 13).finished();
  const Vec b2 = (Vec(3) << -10, -11, -12).finished();
  const BetaPair b = outputs(AsymState::from_betas(b1, b2, Mat::Identity(3, 3), 1.0));
  EXPECT_EQ(b.beta1, b1);
  EXPECT_EQ(b.beta2, b2);
}

TEST(AlignError, IdentityAssignment) {
  const GroundTruth t{v2(1, 2), v2(-3, 0)};
  const Alignment a = align_error(t.beta1, t.beta2, t);
  EXPECT_EQ(a.err1, 0.0);
  EXPECT_EQ(a.err2, 0.0);
  EXPECT_EQ(a.assignment, (std::array<int, 2>{1, 2}));
}

TEST(AlignError, LabelSwapIsAValidLimit) {
  const GroundTruth t{v2(1, 2), v2(-3, 0)};
  const Alignment a = align_error(t.beta2, t.beta1, t);
  EXPECT_EQ(a.err1, 0.0);
  EXPECT_EQ(a.err2, 0.0);
  EXPECT_EQ(a.assignment, (std::array<int, 2>{2, 1}));
}

TEST(AlignError, MidpointTiesGoToFirst) {
  const GroundTruth t{v2(2, 0), v2(-2, 0)};
  const Alignment a = align_error(v2(0, 0), v2(-2, 0), t);
  EXPECT_EQ(a.assignment[0], 1);
  EXPECT_DOUBLE_EQ(a.err1, 2.0);
}

TEST(AlignError, ConvergenceCriterion) {
  const GroundTruth t{v2(3, 4), v2(0, 1)};
  Alignment a;
  a.err1 = 0.2;
  a.err2 = 0.24;
  EXPECT_TRUE(both_converged(a, t, 0.05));
  a.err2 = 0.25;
  EXPECT_FALSE(both_converged(a, t, 0.05));
}

}  // namespace
}  // namespace omlr
