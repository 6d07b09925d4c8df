#pragma once

#include "omlr/linalg.hpp"
#include "omlr/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace omlr {

/// Draws phi from the stationary regressor law.
using PhiSampler = std::function<Vec(Engine&)>;

/// Symmetric mixture driving the mean field: y | phi ~ p N(a, s^2) + (1-p) N(-a, s^2), a = beta*^T phi.
struct SymmetricInstance {
  Vec beta_star;
  double sigma = 1.0;
  double p = 0.5;
};

struct FieldValue {
  Vec value;
  Vec se;  ///< per-coordinate Monte Carlo standard error
};

/// Monte Carlo estimate of f(beta) = E[phi (y tanh(beta^T phi y / sigma^2) - beta^T phi)].
/// The (phi, y) draws are fixed at construction, so every evaluation reuses the
/// same random numbers and f is smooth in beta.
class MonteCarloField {
 public:
  MonteCarloField(const SymmetricInstance& instance, const PhiSampler& sampler, Engine& rng,
                  std::int64_t samples = 200000);

  FieldValue evaluate(const Vec& beta) const;
  Vec operator()(const Vec& beta) const { return evaluate(beta).value; }

 private:
  Mat phi_;
  Vec y_;
  double sigma2_;
};

/// Probabilists' Gauss-Hermite rule: sum_i w_i g(x_i) ~ E[g(X)], X ~ N(0, 1).
struct GaussHermite {
  Vec nodes;
  Vec weights;
};
GaussHermite gauss_hermite(int n);

/// f(beta) with the noise integrated out by Gauss-Hermite quadrature and only
/// phi sampled (fixed draws). Each per-draw term is corrected by the rule's
/// error on the identity E[y tanh(a y / s^2)] = a, scaled by b / a, so
/// f(beta*) = f(-beta*) = f(0) = 0 hold exactly for every draw set.
class ConditionalField {
 public:
  ConditionalField(const SymmetricInstance& instance, const PhiSampler& sampler, Engine& rng,
                   std::int64_t samples = 2000, int nodes = 64);

  FieldValue evaluate(const Vec& beta) const;
  Vec operator()(const Vec& beta) const { return evaluate(beta).value; }

  /// E[y tanh(b y / sigma^2)] for y ~ N(a, sigma^2) by the quadrature rule (uncorrected).
  double conditional_mean(double b, double a) const;

 private:
  Mat phi_;
  Vec signal_;  ///< beta*^T phi per draw
  Vec defect_;  ///< (a - rule(a, a)) / a per draw
  double sigma_;
  GaussHermite rule_;
};

/// Convenience: MonteCarloField evaluated once.
FieldValue mean_field_f(const Vec& beta, const SymmetricInstance& instance, const PhiSampler& sampler, Engine& rng,
                        std::int64_t samples = 200000);

using Field = std::function<Vec(const Vec&)>;

struct OdeState {
  Vec beta;
  Mat R;
  double t = 0.0;
};

struct TrajectoryPoint {
  double t = 0.0;
  Vec beta;
  double V = 0.0;
  double r_error = 0.0;  ///< ||R(t) - (G + e^{-t}(R(0) - G))||_F
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  double max_r_error = 0.0;  ///< over every integration step, recorded or not
  OdeState final_state;
};

/// 0.5 (beta - ref)^T R (beta - ref).
double lyapunov(const Vec& beta, const Mat& R, const Vec& beta_ref);

/// Fixed-step RK4 for d beta/dt = R^{-1} f(beta), dR/dt = G - R. V is tracked
/// against `beta_ref`. Throws NumericalError if R stops being positive definite.
Trajectory integrate(const OdeState& start, const Field& f, const Mat& G, double horizon, double step,
                     const Vec& beta_ref, int record_every = 1);

/// Trajectory CSV: t,beta_1..beta_d,V,R_frobenius_err.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

/// E[y tanh(a y / sigma^2)] for y ~ p N(a, sigma^2) + (1-p) N(-a, sigma^2) by
/// adaptive Gauss-Kronrod quadrature. Throws NumericalError if the error
/// estimate stays above 1e-9.
double lemma3_oracle(double a, double sigma, double p);

/// F(c, x) = int f(c, x, w) exp(-w^2 / (2 sigma^2)) dw with
/// f = (w+x) tanh(c(w+x)/sigma^2) + (w-x) tanh(c(w-x)/sigma^2).
double lemma5_integral(double c, double x, double sigma);

struct MonotonicityVerdict {
  std::vector<double> values;
  bool strictly_increasing = false;
};

/// Evaluates F(c, .) on an increasing grid of positive x.
MonotonicityVerdict lemma5_oracle(double c, std::span<const double> x_grid, double sigma);

}  // namespace omlr
