#pragma once

#include "omlr/asym_em.hpp"
#include "omlr/sym_em.hpp"

#include <optional>

namespace omlr {

/// Finite-sample population EM for the two-component mixture: every iteration
/// reweights the whole batch and solves two weighted least-squares problems.
struct PopEmState {
  Vec beta1;
  Vec beta2;
  int t = 0;
};

/// How the E-step evaluates the softmax. `direct` exponentiates the raw
/// exponents as written; when both residuals are large both terms underflow and
/// the weights become NaN, which aborts the run. Kept as an ablation.
enum class EStepForm { stable, direct };

/// Posterior weight of component 1 for every sample,
/// softmax_i(-(y - beta_i^T phi)^2 / (2 sigma2)) evaluated stably.
Vec e_step(const PopEmState& state, const Batch& data, double sigma2, EStepForm form = EStepForm::stable);

/// Weighted least squares (sum w phi phi^T)^{-1} sum w phi y. nullopt when the
/// weighted Gram matrix is singular (smallest eigenvalue <= 1e-10 * trace).
std::optional<Vec> m_step(const Batch& data, const Vec& weights);

struct PopEmResult {
  PopEmState state;
  bool aborted = false;    ///< a singular M-step stopped the iteration
  bool converged = false;  ///< only meaningful when ground truth was supplied
  Alignment alignment;
};

/// Alternates e_step / m_step T times from `init`.
PopEmResult fit(const Batch& data, PopEmState init, int iterations, double sigma2,
                EStepForm form = EStepForm::stable);

/// As above, then flags convergence when both aligned errors are below
/// rel_tol * max ||beta_i*||. Aborted runs never count as converged.
PopEmResult fit(const Batch& data, PopEmState init, int iterations, double sigma2, const GroundTruth& truth,
                double rel_tol = 0.05, EStepForm form = EStepForm::stable);

}  // namespace omlr
