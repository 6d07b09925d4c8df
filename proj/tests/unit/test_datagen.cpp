#include "omlr/datagen.hpp"
#include "omlr/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace omlr {
namespace {

Vec vec3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

ModelSpec reference_model(double sigma) {
  ModelSpec m;
  m.d = 3;
  m.beta1_star = vec3(1, 15, 13);
  m.beta2_star = vec3(-10, -11, -12);
  m.sigma = sigma;
  m.p = 0.5;
  m.regressor = RegressorProcess::ar1(0.5 * Mat::Identity(3, 3), Mat::Identity(3, 3));
  return m;
}

TEST(SampleLabel, NearDegenerateProbabilityGivesPlusOne) {
  Engine rng(11);
  int plus = 0;
  for (int i = 0; i < 10000; ++i) plus += sample_label(rng, 0.999) == 1;
  EXPECT_GE(plus, 9900);
}

TEST(SampleLabel, FairCoinMeanNearZero) {
  Engine rng(12);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_label(rng, 0.5);
  EXPECT_LE(std::abs(sum / n), 0.02);
}

TEST(SampleLabel, SameSeedSameSequence) {
  Engine a(5);
  Engine b(5);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample_label(a, 0.5), sample_label(b, 0.5));
}

TEST(SampleLabel, RejectsProbabilitiesOutsideOpenInterval) {
  Engine rng(1);
  EXPECT_THROW(sample_label(rng, 0.0), ConfigError);
  EXPECT_THROW(sample_label(rng, 1.0), ConfigError);
  EXPECT_THROW(sample_label(rng, -0.3), ConfigError);
}

TEST(Regressor, Ar1SampleCovarianceMatchesStationaryLaw) {
  RegressorProcess rp = RegressorProcess::ar1(0.5 * Mat::Identity(3, 3), Mat::Identity(3, 3));
  Engine init(1);
  Engine innov(2);
  rp.reset(init);
  const int n = 100000;
  Mat acc = Mat::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Vec phi = rp.next(innov);
    acc += phi * phi.transpose();
  }
  acc /= n;
  const double expected = 1.0 / (1.0 - 0.25);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(acc(i, i), expected, 0.05 * expected);
  EXPECT_LT((rp.stationary_covariance() - expected * Mat::Identity(3, 3)).norm(), 1e-12);
}

TEST(Regressor, IidGaussianSampleMeanNearZero) {
  RegressorProcess rp = RegressorProcess::iid_gaussian(Mat::Identity(3, 3));
  Engine rng(4);
  Vec mean = Vec::Zero(3);
  const int n = 100000;
  for (int i = 0; i < n; ++i) mean += rp.next(rng);
  mean /= n;
  for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(mean[i]), 0.02);
}

TEST(Regressor, Ar1StateUnchangedWithoutCalls) {
  RegressorProcess rp = RegressorProcess::ar1(0.5 * Mat::Identity(2, 2), Mat::Identity(2, 2));
  Engine rng(9);
  rp.reset(rng);
  const Vec before = rp.state();
  const Vec again = rp.state();
  EXPECT_EQ(before, again);
}

TEST(Regressor, SphereDrawsHaveFixedRadius) {
  RegressorProcess rp = RegressorProcess::sphere_uniform(4, 2.5);
  Engine rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(rp.next(rng).norm(), 2.5, 1e-12);
}

TEST(Regressor, RejectsInvalidParameters) {
  EXPECT_THROW(RegressorProcess::ar1(Mat::Identity(2, 2), Mat::Identity(2, 2)), ConfigError);
  Mat not_spd = Mat::Identity(2, 2);
  not_spd(1, 1) = -1.0;
  EXPECT_THROW(RegressorProcess::iid_gaussian(not_spd), ConfigError);
  EXPECT_THROW(RegressorProcess::ar1(0.5 * Mat::Identity(2, 2), not_spd), ConfigError);
  EXPECT_THROW(RegressorProcess::sphere_uniform(2, 0.0), ConfigError);
}

TEST(Emit, NoiselessPlusLabelUsesFirstComponent) {
  ModelSpec m = reference_model(0.0);
  Engine noise(1);
  const Observation o = emit(m, vec3(1, 0, 0), 1, noise);
  EXPECT_EQ(o.y, 1.0);
  EXPECT_EQ(o.z, 1);
}

TEST(Emit, NoiselessMinusLabelUsesSecondComponent) {
  ModelSpec m = reference_model(0.0);
  Engine noise(1);
  EXPECT_EQ(emit(m, vec3(0, 1, 0), -1, noise).y, -11.0);
}

TEST(Emit, ResidualVarianceMatchesSigma) {
  StreamGenerator gen(reference_model(1.0), 21);
  const int n = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  const ModelSpec& m = gen.model();
  for (int i = 0; i < n; ++i) {
    const Observation o = gen.next();
    const double r = o.y - (o.z == 1 ? m.beta1_star : m.beta2_star).dot(o.phi);
    sum += r;
    sum_sq += r * r;
  }
  const double var = sum_sq / n - (sum / n) * (sum / n);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(ModelSpec, ValidationRejectsBadModels) {
  ModelSpec m = reference_model(1.0);
  EXPECT_NO_THROW(m.validate());
  m.p = 1.0;
  EXPECT_THROW(m.validate(), ConfigError);
  m = reference_model(1.0);
  m.sigma = -1.0;
  EXPECT_THROW(m.validate(), ConfigError);
  m = reference_model(1.0);
  m.beta2_star = Vec::Zero(2);
  EXPECT_THROW(m.validate(), ConfigError);
}

TEST(ModelSpec, SymmetricFlagDerivedFromParameters) {
  EXPECT_FALSE(reference_model(1.0).symmetric());
  const ModelSpec s = make_symmetric_model(vec3(1, 15, 13), 1.0, 0.5, RegressorProcess::iid_gaussian(Mat::Identity(3, 3)));
  EXPECT_TRUE(s.symmetric());
  EXPECT_EQ(s.beta2_star, -s.beta1_star);
}

TEST(StreamGenerator, DeterministicAndCounted) {
  StreamGenerator a(reference_model(1.0), 99, 4);
  StreamGenerator b(reference_model(1.0), 99, 4);
  const auto xs = a.take(500);
  const auto ys = b.take(500);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ASSERT_EQ(xs[i].k, static_cast<std::int64_t>(i) + 1);
    ASSERT_EQ(xs[i].phi, ys[i].phi);
    ASSERT_EQ(xs[i].y, ys[i].y);
    ASSERT_EQ(xs[i].z, ys[i].z);
  }
  StreamGenerator c(reference_model(1.0), 99, 5);
  EXPECT_NE(c.next().y, xs.front().y);
}

TEST(StreamCsv, RoundTripIsExact) {
  StreamGenerator gen(reference_model(1.0), 3);
  const auto stream = gen.take(200);
  std::stringstream ss;
  write_stream_csv(ss, stream);
  const auto back = read_stream_csv(ss);
  ASSERT_EQ(back.size(), stream.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    ASSERT_EQ(back[i].k, stream[i].k);
    ASSERT_EQ(back[i].phi, stream[i].phi);
    ASSERT_EQ(back[i].y, stream[i].y);
    ASSERT_EQ(back[i].z, stream[i].z);
  }
}

TEST(StreamCsv, RejectsMalformedInput) {
  std::stringstream bad_header("a,b,c\n");
  EXPECT_THROW(read_stream_csv(bad_header), InputError);
  std::stringstream bad_label("k,phi_1,y,z\n1,0.5,1.0,0\n");
  EXPECT_THROW(read_stream_csv(bad_label), InputError);
  std::stringstream short_row("k,phi_1,y,z\n1,0.5,1.0\n");
  EXPECT_THROW(read_stream_csv(short_row), InputError);
}

}  // namespace
}  // namespace omlr
