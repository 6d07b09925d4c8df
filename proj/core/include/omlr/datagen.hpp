#pragma once

#include "omlr/linalg.hpp"
#include "omlr/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <variant>
#include <vector>

namespace omlr {

struct IidGaussian {
  Mat covariance;
};

/// phi_{k+1} = A phi_k + e_{k+1}, e ~ N(0, innovation_cov).
struct Ar1 {
  Mat a;
  Mat innovation_cov;
};

/// Uniform on the sphere of the given radius.
struct SphereUniform {
  Eigen::Index d = 0;
  double radius = 1.0;
};

using RegressorKind = std::variant<IidGaussian, Ar1, SphereUniform>;

/// Stationary, ergodic regressor source. Covariances are validated at
/// construction; per-call sampling never throws.
class RegressorProcess {
 public:
  static RegressorProcess iid_gaussian(Mat covariance);
  static RegressorProcess ar1(Mat a, Mat innovation_cov);
  static RegressorProcess sphere_uniform(Eigen::Index d, double radius);

  Eigen::Index dim() const { return dim_; }
  const RegressorKind& kind() const { return kind_; }

  /// lim E[phi phi^T].
  const Mat& stationary_covariance() const { return stationary_cov_; }

  /// Independent draw from the stationary law.
  Vec draw_stationary(Engine& rng) const;

  /// Places the AR(1) state at an exact stationary draw. No-op for i.i.d. kinds.
  void reset(Engine& rng);

  /// Next regressor. AR(1) advances its internal state.
  Vec next(Engine& innovations);

  /// Current AR(1) state (zero-sized for i.i.d. kinds).
  const Vec& state() const { return state_; }

 private:
  RegressorProcess(RegressorKind kind, Eigen::Index dim);

  Vec gaussian(Engine& rng, const Mat& chol) const;

  RegressorKind kind_;
  Eigen::Index dim_ = 0;
  Mat stationary_cov_;
  Mat stationary_chol_;
  Mat innovation_chol_;
  Vec state_;
};

struct ModelSpec {
  Eigen::Index d = 0;
  Vec beta1_star;
  Vec beta2_star;
  /// Noise standard deviation. Zero is accepted for noiseless streams.
  double sigma = 1.0;
  double p = 0.5;
  RegressorProcess regressor = RegressorProcess::iid_gaussian(Mat::Identity(1, 1));

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  bool symmetric() const;
  /// beta1_star; the symmetric model reads y = z beta*^T phi + w.
  const Vec& beta_star() const { return beta1_star; }
};

/// Symmetric model y = z beta*^T phi + w.
ModelSpec make_symmetric_model(const Vec& beta_star, double sigma, double p, RegressorProcess regressor);

/// The record an estimator is allowed to see.
struct Sample {
  Vec phi;
  double y = 0.0;
};

struct Observation {
  std::int64_t k = 0;
  Vec phi;
  double y = 0.0;
  int z = 1;  ///< hidden label in {+1, -1}; evaluation only

  Sample sample() const { return {phi, y}; }
};

/// +1 with probability p, -1 otherwise.
int sample_label(Engine& rng, double p);

/// y = beta_z*^T phi + w with w ~ N(0, sigma^2).
Observation emit(const ModelSpec& model, const Vec& phi, int z, Engine& noise);

/// Sequential stream of observations for one replication.
class StreamGenerator {
 public:
  StreamGenerator(ModelSpec model, std::uint64_t seed, std::uint64_t replication = 0);

  Observation next();
  std::vector<Observation> take(std::int64_t n);

  const ModelSpec& model() const { return model_; }
  std::int64_t k() const { return k_; }

 private:
  ModelSpec model_;
  StreamSet streams_;
  std::int64_t k_ = 0;
};

/// CSV with header `k,phi_1..phi_d,y,z`.
void write_stream_csv(std::ostream& os, const std::vector<Observation>& stream);
std::vector<Observation> read_stream_csv(std::istream& is);

}  // namespace omlr
