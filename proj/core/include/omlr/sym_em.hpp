#pragma once

#include "omlr/datagen.hpp"
#include "omlr/linalg.hpp"

#include <cstdint>
#include <span>

namespace omlr {

/// Online EM estimator state for y = z beta*^T phi + w.
struct SymState {
  Vec beta;
  Mat P;
  double sigma2 = 1.0;
  std::int64_t k = 0;

  /// Rejects beta0 == 0 (a fixed point of the recursion), non-SPD P0 and sigma2 <= 0.
  static SymState init(Vec beta0, Mat p0, double sigma2);
};

/// |argument| cap applied before tanh / exp; inert since tanh(500) == 1.
inline constexpr double kTanhClamp = 500.0;

/// P(z = +1 | phi, y, beta) = sigmoid(2 beta^T phi y / sigma2).
double responsibility(const Vec& beta, const Vec& phi, double y, double sigma2);

/// Conditional-mean output y tanh(beta^T phi y / sigma2) = (2 responsibility - 1) y.
double ybar(const Vec& beta, const Vec& phi, double y, double sigma2);

/// One online EM step: a = 1/(1 + phi^T P phi),
/// beta += a P phi (ybar - beta^T phi), P -= a P phi phi^T P.
SymState step(SymState state, const Vec& phi, double y);

/// Column-major batch of samples: phi is d x n.
struct Batch {
  Mat phi;
  Vec y;

  static Batch from(std::span<const Sample> samples);
  static Batch from(std::span<const Observation> observations);
  Eigen::Index size() const { return y.size(); }
};

/// Offline M-step (sum phi phi^T)^{-1} sum phi y tanh(beta_t^T phi y / sigma2).
/// Throws NumericalError when the Gram matrix is singular.
Vec batch_mle_iterate(const Batch& data, const Vec& beta_t, double sigma2);

/// min(||beta - beta*||, ||beta + beta*||).
double sym_aligned_error(const Vec& beta, const Vec& beta_star);

}  // namespace omlr
