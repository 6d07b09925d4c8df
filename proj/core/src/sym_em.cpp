#include "omlr/sym_em.hpp"

#include "omlr/errors.hpp"
#include "omlr/rls.hpp"

#include <algorithm>
#include <cmath>

namespace omlr {
namespace {

double clamp_arg(double x) { return std::clamp(x, -kTanhClamp, kTanhClamp); }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

SymState SymState::init(Vec beta0, Mat p0, double sigma2) {
  if (beta0.size() == 0) throw ConfigError("beta0 must be non-empty");
  if (beta0.isZero(0.0)) throw ConfigError("beta0 must be nonzero: the origin is a fixed point of the recursion");
  if (p0.rows() != beta0.size() || !is_spd(p0)) throw ConfigError("P0 must be symmetric positive definite of size d");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  return SymState{std::move(beta0), std::move(p0), sigma2, 0};
}

double responsibility(const Vec& beta, const Vec& phi, double y, double sigma2) {
  const double u = clamp_arg(beta.dot(phi) * y / sigma2);
  return stable_sigmoid(2.0 * u);
}

double ybar(const Vec& beta, const Vec& phi, double y, double sigma2) {
  return y * std::tanh(clamp_arg(beta.dot(phi) * y / sigma2));
}

SymState step(SymState state, const Vec& phi, double y) {
  require_dim(phi, state.beta.size(), "sym step: phi");
  const RlsGain g = rls_gain(state.P, phi);
  const double innovation = ybar(state.beta, phi, y, state.sigma2) - state.beta.dot(phi);
  state.beta += (g.a * innovation) * g.p_phi;
  rls_shrink(state.P, g);
  ++state.k;
  return state;
}

Batch Batch::from(std::span<const Sample> samples) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index d = n ? samples.front().phi.size() : 0;
  b.phi.resize(d, n);
  b.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    require_dim(s.phi, d, "Batch: phi");
    b.phi.col(i) = s.phi;
    b.y[i] = s.y;
  }
  return b;
}

Batch Batch::from(std::span<const Observation> observations) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(observations.size());
  const Eigen::Index d = n ? observations.front().phi.size() : 0;
  b.phi.resize(d, n);
  b.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = observations[static_cast<std::size_t>(i)];
    require_dim(o.phi, d, "Batch: phi");
    b.phi.col(i) = o.phi;
    b.y[i] = o.y;
  }
  return b;
}

Vec batch_mle_iterate(const Batch& data, const Vec& beta_t, double sigma2) {
  require_dim(beta_t, data.phi.rows(), "batch_mle_iterate: beta_t");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  const Mat gram = data.phi * data.phi.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (data.size() == 0 || !(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff()))) {
    throw NumericalError("batch_mle_iterate: singular Gram matrix");
  }
  Vec rhs = Vec::Zero(data.phi.rows());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    rhs += data.phi.col(i) * ybar(beta_t, data.phi.col(i), data.y[i], sigma2);
  }
  return gram.ldlt().solve(rhs);
}

double sym_aligned_error(const Vec& beta, const Vec& beta_star) {
  return std::min((beta - beta_star).norm(), (beta + beta_star).norm());
}

}  // namespace omlr
