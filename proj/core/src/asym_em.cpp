#include "omlr/asym_em.hpp"

#include "omlr/errors.hpp"
#include "omlr/rls.hpp"
#include "omlr/sym_em.hpp"

#include <algorithm>
#include <cmath>

namespace omlr {

AsymState AsymState::init(Vec theta1, Vec theta2, Mat p0, double sigma2) {
  const auto d = theta2.size();
  if (d == 0 || theta1.size() != d) throw ConfigError("theta1 and theta2 must be non-empty with equal length");
  if (theta2.isZero(0.0)) throw ConfigError("theta2 must be initialized nonzero");
  if (p0.rows() != d || !is_spd(p0)) throw ConfigError("P0 must be symmetric positive definite of size d");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  return AsymState{std::move(theta1), std::move(theta2), std::move(p0), sigma2, 0};
}

AsymState AsymState::from_betas(const Vec& beta1, const Vec& beta2, Mat p0, double sigma2) {
  if (beta1.size() != beta2.size()) throw ConfigError("beta1 and beta2 must have equal length");
  return init(0.5 * (beta1 + beta2), 0.5 * (beta1 - beta2), std::move(p0), sigma2);
}

AsymState step(AsymState state, const Vec& phi, double y, ResidualSource residual) {
  require_dim(phi, state.theta1.size(), "asym step: phi");
  const RlsGain g = rls_gain(state.P, phi);

  const double m_pre = y - state.theta1.dot(phi);
  state.theta1 += (g.a * m_pre) * g.p_phi;
  const double m = residual == ResidualSource::pre_update ? m_pre : y - state.theta1.dot(phi);

  const double innovation = ybar(state.theta2, phi, m, state.sigma2) - state.theta2.dot(phi);
  state.theta2 += (g.a * innovation) * g.p_phi;

  rls_shrink(state.P, g);
  ++state.k;
  return state;
}

BetaPair outputs(const AsymState& state) {
  return {state.theta1 + state.theta2, state.theta1 - state.theta2};
}

Alignment align_error(const Vec& beta1, const Vec& beta2, const GroundTruth& truth) {
  Alignment out;
  const auto match = [&](const Vec& b, double& err, int& idx) {
    const double d1 = (b - truth.beta1).norm();
    const double d2 = (b - truth.beta2).norm();
    if (d1 <= d2) {
      err = d1;
      idx = 1;
    } else {
      err = d2;
      idx = 2;
    }
  };
  match(beta1, out.err1, out.assignment[0]);
  match(beta2, out.err2, out.assignment[1]);
  return out;
}

bool both_converged(const Alignment& a, const GroundTruth& truth, double rel_tol) {
  const double scale = truth.max_norm();
  const double tol = rel_tol * (scale > 0.0 ? scale : 1.0);
  return a.err1 < tol && a.err2 < tol;
}

}  // namespace omlr
