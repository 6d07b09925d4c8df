#pragma once

#include "omlr/linalg.hpp"

#include <cstdint>
#include <optional>

namespace omlr {

/// Running second-moment estimate Rbar_k of the regressor.
struct WhitenState {
  std::int64_t k = 0;
  Mat rbar;

  static WhitenState identity(Eigen::Index d) { return {0, Mat::Identity(d, d)}; }
};

/// Rbar_k = Rbar_{k-1} + (phi phi^T - Rbar_{k-1}) / k, k = state.k + 1.
WhitenState update_covariance(WhitenState state, const Vec& phi);

/// Rbar^{-1/2} phi through the symmetric square root; nullopt while Rbar is
/// not safely positive definite (smallest eigenvalue below 1e-10).
std::optional<Vec> whiten(const WhitenState& state, const Vec& phi);

/// Streaming whitening stage with a warm-up: samples pass through raw until
/// k >= 2d and Rbar is positive definite.
class Whitener {
 public:
  explicit Whitener(Eigen::Index d);

  /// Folds phi into Rbar, then returns the (possibly) whitened regressor.
  Vec apply(const Vec& phi);

  bool engaged() const { return engaged_; }
  const WhitenState& state() const { return state_; }

  /// Current transform Rbar^{-1/2} (identity before engagement).
  const Mat& transform() const { return transform_; }

  /// Maps a parameter fitted on whitened regressors back to raw coordinates:
  /// y ~ b^T W phi  =>  beta = W b.
  Vec to_original(const Vec& whitened_beta) const { return transform_ * whitened_beta; }

 private:
  WhitenState state_;
  Mat transform_;
  bool engaged_ = false;
};

}  // namespace omlr
