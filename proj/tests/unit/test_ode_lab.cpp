#include "omlr/errors.hpp"
#include "omlr/ode_lab.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <array>
#include <sstream>

namespace omlr {
namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

PhiSampler standard_normal(Eigen::Index d) {
  return [d](Engine& e) { return testing::random_vec(e, d); };
}

const SymmetricInstance kInstance{v2(1.0, -0.5), 1.0, 0.5};

TEST(GaussHermite, IntegratesGaussianMoments) {
  const GaussHermite gh = gauss_hermite(32);
  const auto moment = [&](int k) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) s += gh.weights[i] * std::pow(gh.nodes[i], k);
    return s;
  };
  EXPECT_NEAR(moment(0), 1.0, 1e-13);
  EXPECT_NEAR(moment(1), 0.0, 1e-13);
  EXPECT_NEAR(moment(2), 1.0, 1e-12);
  EXPECT_NEAR(moment(4), 3.0, 1e-11);
  EXPECT_NEAR(moment(8), 105.0, 1e-9);
}

TEST(Lemma3, OracleExamples) {
  EXPECT_NEAR(lemma3_oracle(0.0, 1.0, 0.5), 0.0, 1e-12);
  EXPECT_NEAR(lemma3_oracle(1.0, 1.0, 0.3), 1.0, 1e-6);
  EXPECT_NEAR(lemma3_oracle(5.0, 0.1, 0.5), 5.0, 1e-6);
}

TEST(Lemma3, ConditionalFieldQuadratureConvergesToOracle) {
  Engine rng(1);
  const ConditionalField coarse({Vec::Ones(1), 1.0, 0.5}, standard_normal(1), rng, 10, 64);
  const ConditionalField fine({Vec::Ones(1), 1.0, 0.5}, standard_normal(1), rng, 10, 400);
  for (double a : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    const double oracle = lemma3_oracle(a, 1.0, 0.5);
    EXPECT_NEAR(coarse.conditional_mean(a, a), oracle, 1e-5);
    EXPECT_NEAR(fine.conditional_mean(a, a), oracle, 1e-8);
  }
}

TEST(Lemma5, MonotoneOnReferenceGrid) {
  const std::array<double, 4> grid{0.5, 1.0, 2.0, 4.0};
  for (double c : {0.1, 1.0, 10.0}) {
    const MonotonicityVerdict v = lemma5_oracle(c, grid, 1.0);
    EXPECT_TRUE(v.strictly_increasing) << "c = " << c;
    EXPECT_EQ(v.values.size(), grid.size());
  }
}

TEST(Lemma5, NonNegativeAtOrigin) {
  for (double c : {0.1, 1.0, 10.0}) EXPECT_GE(lemma5_integral(c, 0.0, 1.0), 0.0);
}

TEST(Lemma5, RejectsInvalidGrid) {
  const std::array<double, 3> unsorted{1.0, 0.5, 2.0};
  EXPECT_THROW(lemma5_oracle(1.0, unsorted, 1.0), ConfigError);
}

TEST(MeanField, VanishesAtOriginExactly) {
  Engine rng(2);
  const MonteCarloField field(kInstance, standard_normal(2), rng, 20000);
  EXPECT_EQ(field(Vec::Zero(2)), Vec::Zero(2));
}

TEST(MeanField, VanishesAtBothSignsOfTruthWithinThreeSe) {
  Engine rng(3);
  const MonteCarloField field(kInstance, standard_normal(2), rng, 200000);
  for (const Vec& b : {Vec(kInstance.beta_star), Vec(-kInstance.beta_star)}) {
    const FieldValue f = field.evaluate(b);
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_LE(std::abs(f.value[i]), 3.0 * f.se[i]);
  }
}

TEST(MeanField, NonZeroAwayFromEquilibria) {
  Engine rng(4);
  const MonteCarloField field(kInstance, standard_normal(2), rng, 200000);
  const FieldValue f = field.evaluate(v2(0.3, 0.8));
  EXPECT_GT(f.value.cwiseAbs().maxCoeff(), 10.0 * f.se.maxCoeff());
}

TEST(MeanField, ConditionalFieldAgreesWithMonteCarlo) {
  Engine a(5);
  Engine b(6);
  const MonteCarloField mc(kInstance, standard_normal(2), a, 400000);
  const ConditionalField cf(kInstance, standard_normal(2), b, 20000, 64);
  const Vec beta = v2(0.3, 0.8);
  const FieldValue x = mc.evaluate(beta);
  const FieldValue y = cf.evaluate(beta);
  for (Eigen::Index i = 0; i < 2; ++i) EXPECT_LE(std::abs(x.value[i] - y.value[i]), 4.0 * std::hypot(x.se[i], y.se[i]));
  EXPECT_LE(cf(kInstance.beta_star).norm(), 1e-10);
  EXPECT_LE(cf(-kInstance.beta_star).norm(), 1e-10);
}

TEST(Lyapunov, Examples) {
  EXPECT_EQ(lyapunov(v2(1, 2), Mat::Identity(2, 2), v2(1, 2)), 0.0);
  EXPECT_DOUBLE_EQ(lyapunov(v2(3, 4), Mat::Identity(2, 2), v2(0, 0)), 12.5);
}

TEST(Integrate, GainFollowsClosedForm) {
  const Mat G = (Mat(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
  const Field zero = [](const Vec& b) { return Vec(Vec::Zero(b.size())); };
  const Trajectory tr = integrate({v2(1, 1), 2.0 * G, 0.0}, zero, G, std::log(2.0), std::log(2.0) / 100.0, v2(0, 0));
  EXPECT_LE((tr.final_state.R - 1.5 * G).norm(), 1e-10);
  EXPECT_LE(tr.max_r_error, 1e-10);
}

TEST(Integrate, EquilibriumIsStationary) {
  Engine rng(7);
  const auto cf = std::make_shared<ConditionalField>(kInstance, standard_normal(2), rng, 2000, 32);
  const Mat G = Mat::Identity(2, 2);
  const Trajectory tr =
      integrate({kInstance.beta_star, G, 0.0}, [cf](const Vec& b) { return (*cf)(b); }, G, 5.0, 0.05, kInstance.beta_star);
  EXPECT_LE((tr.final_state.beta - kInstance.beta_star).norm(), 1e-9);
}

TEST(Integrate, ConvergesToTruthOnItsSideWithDecreasingLyapunov) {
  Engine rng(8);
  const auto cf = std::make_shared<ConditionalField>(kInstance, standard_normal(2), rng, 2000, 32);
  const Field f = [cf](const Vec& b) { return (*cf)(b); };
  const Mat G = Mat::Identity(2, 2);
  for (const Vec& start : {v2(0.3, 0.8), v2(-0.3, -0.8), v2(2.0, 1.0)}) {
    const double side = start.dot(kInstance.beta_star) > 0 ? 1.0 : -1.0;
    const Vec ref = side * kInstance.beta_star;
    const Trajectory tr = integrate({start, 1.5 * G, 0.0}, f, G, 50.0, 0.05, ref, 2);
    EXPECT_LE((tr.final_state.beta - ref).norm(), 1e-2);
    EXPECT_LE(tr.max_r_error, 1e-6);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& p : tr.points) {
      if (p.t < 5.0) continue;
      EXPECT_LE(p.V, prev);
      prev = p.V;
    }
  }
}

TEST(Integrate, RejectsIndefiniteGain) {
  const Field zero = [](const Vec& b) { return Vec(Vec::Zero(b.size())); };
  EXPECT_THROW(integrate({v2(1, 1), -Mat::Identity(2, 2), 0.0}, zero, Mat::Identity(2, 2), 1.0, 0.1, v2(0, 0)),
               ConfigError);
}

TEST(Integrate, TrajectoryCsvHeader) {
  const Field zero = [](const Vec& b) { return Vec(Vec::Zero(b.size())); };
  const Trajectory tr = integrate({v2(1, 1), Mat::Identity(2, 2), 0.0}, zero, Mat::Identity(2, 2), 0.1, 0.05, v2(0, 0));
  std::stringstream ss;
  write_trajectory_csv(ss, tr);
  std::string head;
  std::getline(ss, head);
  EXPECT_EQ(head, "t,beta_1,beta_2,V,R_frobenius_err");
}

}  // namespace
}  // namespace omlr
