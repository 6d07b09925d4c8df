#include "omlr/clustering.hpp"
#include "omlr/errors.hpp"
#include "test_support.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <numbers>

namespace omlr {
namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

BoundInputs scalar_gaussian(MixtureKind kind, double direction, double sigma, double phi_sd = 1.0) {
  BoundInputs in;
  in.kind = kind;
  in.direction = v1(direction);
  in.sigma = sigma;
  in.phi_sampler = [phi_sd](Engine& e) { return v1(std::normal_distribution<double>(0.0, phi_sd)(e)); };
  return in;
}

// Expected chosen squared residual at a fixed regressor, by direct quadrature
// over the noise: the truth is one branch, the classifier picks the closer one.
double expected_min_residual(double gap, double sigma) {
  const auto integrand = [&](double w) {
    const double r = std::min(w * w, (w + gap) * (w + gap));
    return r * std::exp(-0.5 * w * w / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-13);
}

TEST(ClassifySym, PicksCloserBranch) {
  EXPECT_EQ(classify_sym(v1(1.0), v1(2.0), 3.0), 2);
  EXPECT_EQ(classify_sym(v1(1.0), v1(2.0), -3.0), 1);
}

TEST(ClassifySym, TieGoesToFirst) { EXPECT_EQ(classify_sym(v1(1.0), v1(2.0), 0.0), 1); }

TEST(ClassifySym, ResidualOfChosenBranch) {
  EXPECT_DOUBLE_EQ(sym_residual_sq(v1(1.0), v1(2.0), 3.0, 2), 1.0);
  EXPECT_DOUBLE_EQ(sym_residual_sq(v1(1.0), v1(2.0), 3.0, 1), 25.0);
}

TEST(ClassifyAsym, Examples) {
  const Vec phi = v1(1.0);
  EXPECT_EQ(classify_asym(v1(1.0), v1(-1.0), phi, 0.9), 1);
  EXPECT_EQ(classify_asym(v1(1.0), v1(-1.0), phi, -0.9), 2);
  EXPECT_EQ(classify_asym(v1(1.0), v1(-1.0), phi, 0.0), 1);
  for (double y : {-5.0, 0.0, 3.0}) EXPECT_EQ(classify_asym(v1(2.0), v1(2.0), phi, y), 1);
}

TEST(Correctness, SymmetricSignResolvedAgainstTruth) {
  const Vec b = v1(2.0);
  EXPECT_TRUE(sym_correct(2, 1, b, b));
  EXPECT_TRUE(sym_correct(1, -1, b, b));
  EXPECT_TRUE(sym_correct(2, -1, -b, b));
  EXPECT_FALSE(sym_correct(2, 1, -b, b));
}

TEST(Correctness, AsymmetricUsesAssignment) {
  Alignment swapped;
  swapped.assignment = {2, 1};
  EXPECT_TRUE(asym_correct(1, -1, swapped));
  EXPECT_FALSE(asym_correct(1, 1, swapped));
  EXPECT_TRUE(asym_correct(1, 1, Alignment{}));
}

TEST(ClusterReport, Arithmetic) {
  ClusterReport r;
  r = update_report(std::move(r), 0.49, true);
  EXPECT_DOUBLE_EQ(r.J(), 0.49);
  r = ClusterReport{};
  for (int i = 0; i < 5; ++i) r = update_report(std::move(r), 0.0, true);
  EXPECT_EQ(r.J(), 0.0);
  r = ClusterReport{};
  r = update_report(std::move(r), 1.0, true);
  r = update_report(std::move(r), 9.0, false);
  EXPECT_DOUBLE_EQ(r.J(), 5.0);
  EXPECT_DOUBLE_EQ(r.correct_rate(), 0.5);
}

TEST(ClusterReport, MergeIsAssociativeAndMatchesSequential) {
  Engine rng(3);
  std::vector<double> residuals;
  for (int i = 0; i < 30; ++i) residuals.push_back(std::abs(testing::random_vec(rng, 1)[0]));
  const auto build = [&](int lo, int hi) {
    ClusterReport r;
    r.keep_trace = true;
    for (int i = lo; i < hi; ++i) r = update_report(std::move(r), residuals[static_cast<std::size_t>(i)], i % 3 == 0);
    return r;
  };
  const ClusterReport whole = build(0, 30);
  ClusterReport left = build(0, 10);
  left.merge(build(10, 20)).merge(build(20, 30));
  ClusterReport right_first = build(10, 20);
  right_first.merge(build(20, 30));
  ClusterReport other = build(0, 10);
  other.merge(right_first);
  for (const auto* r : {&left, &other}) {
    EXPECT_EQ(r->n, whole.n);
    EXPECT_EQ(r->correct, whole.correct);
    EXPECT_NEAR(r->J(), whole.J(), 1e-14);
    ASSERT_EQ(r->per_step.size(), whole.per_step.size());
    for (std::size_t i = 0; i < whole.per_step.size(); ++i) EXPECT_NEAR(r->per_step[i], whole.per_step[i], 1e-13);
  }
}

TEST(Bounds, ZeroDirectionGivesZero) {
  Engine rng(1);
  const McEstimate b = classification_bound_mc(scalar_gaussian(MixtureKind::symmetric, 0.0, 1.0), rng, 10000);
  EXPECT_EQ(b.value, 0.0);
  EXPECT_EQ(classification_bound_gaussian(0.0, 1.0, MixtureKind::symmetric), 0.0);
}

TEST(Bounds, LargeNoiseGivesZero) {
  Engine rng(2);
  EXPECT_LT(classification_bound_mc(scalar_gaussian(MixtureKind::symmetric, 1.0, 1e4), rng, 10000).value, 1e-7);
}

TEST(Bounds, GaussianClosedForms) {
  EXPECT_DOUBLE_EQ(classification_bound_gaussian(3.0, 1.0, MixtureKind::symmetric), 0.5);
  EXPECT_DOUBLE_EQ(classification_bound_gaussian(12.0, 1.0, MixtureKind::asymmetric), 0.5);
  EXPECT_THROW(classification_bound_gaussian(1.0, 0.0, MixtureKind::symmetric), ConfigError);
}

TEST(Bounds, MonteCarloMatchesClosedForm) {
  Engine rng(3);
  const McEstimate b =
      classification_bound_mc(scalar_gaussian(MixtureKind::symmetric, std::sqrt(3.0), 1.0), rng, 200000);
  EXPECT_LE(std::abs(b.value - 0.5), 3.0 * b.se);
  Engine rng2(4);
  const McEstimate a =
      classification_bound_mc(scalar_gaussian(MixtureKind::asymmetric, std::sqrt(12.0), 1.0), rng2, 200000);
  EXPECT_LE(std::abs(a.value - 0.5), 3.0 * a.se);
}

TEST(Bounds, RejectsTooFewSamples) {
  Engine rng(5);
  EXPECT_THROW(classification_bound_mc(scalar_gaussian(MixtureKind::symmetric, 1.0, 1.0), rng, 10), ConfigError);
}

TEST(Eta, NonPositiveAndEvenWithTailLimits) {
  for (auto kind : {MixtureKind::symmetric, MixtureKind::asymmetric}) {
    for (double s = -30.0; s <= 30.0; s += 0.37) {
      EXPECT_LE(eta(s, 1.3, kind), 1e-15);
      EXPECT_DOUBLE_EQ(eta(s, 1.3, kind), eta(-s, 1.3, kind));
    }
    EXPECT_EQ(eta(0.0, 1.0, kind), 0.0);
    EXPECT_LT(std::abs(eta(100.0, 1.0, kind)), 1e-12);
  }
}

TEST(Eta, MatchesDirectIntegrationOfChosenResidual) {
  for (double sigma : {0.5, 1.0, 2.0}) {
    for (double s : {0.1, 0.7, 1.5, 4.0}) {
      // Symmetric: branches +-s, so the competing branch sits 2s away.
      EXPECT_NEAR(expected_min_residual(2.0 * s, sigma), sigma * sigma + 4.0 * eta(s, sigma, MixtureKind::symmetric),
                  1e-9);
      EXPECT_NEAR(expected_min_residual(s, sigma), sigma * sigma + eta(s, sigma, MixtureKind::asymmetric), 1e-9);
    }
  }
}

TEST(JLimit, ZeroDirectionGivesNoiseVariance) {
  Engine rng(6);
  const McEstimate j = j_limit(scalar_gaussian(MixtureKind::symmetric, 0.0, 1.5), rng, 10000);
  EXPECT_DOUBLE_EQ(j.value, 2.25);
}

TEST(JLimit, FarSeparatedBranchesGiveNoiseVariance) {
  Engine rng(7);
  BoundInputs in = scalar_gaussian(MixtureKind::symmetric, 1.0, 1.0);
  in.phi_sampler = [](Engine& e) { return v1(std::bernoulli_distribution(0.5)(e) ? 1e3 : -1e3); };
  EXPECT_NEAR(j_limit(in, rng, 10000).value, 1.0, 1e-12);
}

TEST(JLimit, IndependentSeedsAgree) {
  Engine a(8);
  Engine b(9);
  const BoundInputs in = scalar_gaussian(MixtureKind::symmetric, 1.0, 1.0);
  const McEstimate ja = j_limit(in, a, 200000);
  const McEstimate jb = j_limit(in, b, 200000);
  EXPECT_LE(std::abs(ja.value - jb.value), 3.0 * std::hypot(ja.se, jb.se));
  EXPECT_LT(ja.value, 1.0);
}

}  // namespace
}  // namespace omlr
