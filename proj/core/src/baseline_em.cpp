#include "omlr/baseline_em.hpp"

#include "omlr/errors.hpp"

#include <cmath>
#include <utility>

namespace omlr {

namespace {

// Both posterior weights, computed symmetrically so that exchanging the
// components exchanges the weights bit-for-bit.
std::pair<Vec, Vec> posterior_weights(const PopEmState& state, const Batch& data, double sigma2, EStepForm form) {
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  require_dim(state.beta1, data.phi.rows(), "e_step: beta1");
  require_dim(state.beta2, data.phi.rows(), "e_step: beta2");
  const Eigen::ArrayXd r1 = (data.y - data.phi.transpose() * state.beta1).array().square();
  const Eigen::ArrayXd r2 = (data.y - data.phi.transpose() * state.beta2).array().square();
  // alpha = e^{-r1/2s} / (e^{-r1/2s} + e^{-r2/2s}). The stable form subtracts the
  // larger exponent; the direct form does not and yields 0/0 once both underflow.
  const bool shift = form == EStepForm::stable;
  Vec alpha1(data.size());
  Vec alpha2(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double l1 = -r1[i] / (2.0 * sigma2);
    const double l2 = -r2[i] / (2.0 * sigma2);
    const double top = shift ? std::max(l1, l2) : 0.0;
    const double e1 = std::exp(l1 - top);
    const double e2 = std::exp(l2 - top);
    alpha1[i] = e1 / (e1 + e2);
    alpha2[i] = e2 / (e2 + e1);
  }
  return {std::move(alpha1), std::move(alpha2)};
}

}  // namespace

Vec e_step(const PopEmState& state, const Batch& data, double sigma2, EStepForm form) {
  return posterior_weights(state, data, sigma2, form).first;
}

std::optional<Vec> m_step(const Batch& data, const Vec& weights) {
  if (weights.size() != data.size()) throw InputError("m_step: one weight per sample required");
  const Mat gram = data.phi * weights.asDiagonal() * data.phi.transpose();
  const double trace = gram.trace();
  if (!(trace > 0.0) || !(min_eigenvalue(gram) > 1e-10 * trace)) return std::nullopt;
  const Vec rhs = data.phi * weights.cwiseProduct(data.y);
  return Vec(gram.ldlt().solve(rhs));
}

PopEmResult fit(const Batch& data, PopEmState init, int iterations, double sigma2, EStepForm form) {
  if (iterations < 1) throw ConfigError("population EM needs at least one iteration");
  PopEmResult result{std::move(init), false, false, {}};
  auto& s = result.state;
  for (int t = 0; t < iterations; ++t) {
    const auto [alpha1, alpha2] = posterior_weights(s, data, sigma2, form);
    auto b1 = m_step(data, alpha1);
    auto b2 = m_step(data, alpha2);
    if (!b1 || !b2) {
      result.aborted = true;
      break;
    }
    s.beta1 = std::move(*b1);
    s.beta2 = std::move(*b2);
    ++s.t;
  }
  return result;
}

PopEmResult fit(const Batch& data, PopEmState init, int iterations, double sigma2, const GroundTruth& truth,
                double rel_tol, EStepForm form) {
  PopEmResult result = fit(data, std::move(init), iterations, sigma2, form);
  result.alignment = align_error(result.state.beta1, result.state.beta2, truth);
  result.converged = !result.aborted && both_converged(result.alignment, truth, rel_tol);
  return result;
}

}  // namespace omlr
