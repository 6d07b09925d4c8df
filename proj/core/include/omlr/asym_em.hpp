#pragma once

#include "omlr/datagen.hpp"
#include "omlr/linalg.hpp"

#include <array>
#include <cstdint>

namespace omlr {

/// Which theta1 the EM step's residual m = y - theta1^T phi is computed with.
/// The algorithm uses the pre-update estimate; the post-update variant is kept
/// as an ablation.
enum class ResidualSource { pre_update, post_update };

/// Two-step online estimator for the asymmetric model written as
/// y = theta1*^T phi + z theta2*^T phi + w, theta1* = (b1+b2)/2, theta2* = (b1-b2)/2.
/// Both steps share one gain matrix P.
struct AsymState {
  Vec theta1;
  Vec theta2;
  Mat P;
  double sigma2 = 1.0;
  std::int64_t k = 0;

  static AsymState init(Vec theta1, Vec theta2, Mat p0, double sigma2);
  /// theta1 = (b1 + b2)/2, theta2 = (b1 - b2)/2.
  static AsymState from_betas(const Vec& beta1, const Vec& beta2, Mat p0, double sigma2);
};

AsymState step(AsymState state, const Vec& phi, double y, ResidualSource residual = ResidualSource::pre_update);

struct BetaPair {
  Vec beta1;
  Vec beta2;
};

/// beta1 = theta1 + theta2, beta2 = theta1 - theta2.
BetaPair outputs(const AsymState& state);

struct GroundTruth {
  Vec beta1;
  Vec beta2;

  static GroundTruth of(const ModelSpec& model) { return {model.beta1_star, model.beta2_star}; }
  double max_norm() const { return std::max(beta1.norm(), beta2.norm()); }
};

/// Each estimate matched to its nearest true parameter (ties to index 1).
struct Alignment {
  double err1 = 0.0;
  double err2 = 0.0;
  std::array<int, 2> assignment{1, 2};
};

Alignment align_error(const Vec& beta1, const Vec& beta2, const GroundTruth& truth);
inline Alignment align_error(const Vec& beta1, const Vec& beta2, const ModelSpec& model) {
  return align_error(beta1, beta2, GroundTruth::of(model));
}

/// Both aligned errors below rel_tol * max_i ||beta_i*||.
bool both_converged(const Alignment& a, const GroundTruth& truth, double rel_tol);

}  // namespace omlr
