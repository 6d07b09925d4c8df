#include "omlr/ode_lab.hpp"

#include "omlr/csv.hpp"
#include "omlr/errors.hpp"
#include "omlr/sym_em.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace omlr {
namespace {

double clamped_tanh(double x) { return std::tanh(std::clamp(x, -kTanhClamp, kTanhClamp)); }

Mat draw_phis(const PhiSampler& sampler, Engine& rng, std::int64_t samples) {
  if (samples < 2) throw ConfigError("mean field needs at least two samples");
  Vec first = sampler(rng);
  Mat phi(first.size(), samples);
  phi.col(0) = first;
  for (std::int64_t j = 1; j < samples; ++j) phi.col(j) = sampler(rng);
  return phi;
}

FieldValue reduce(const Mat& phi, const Vec& h) {
  const double n = static_cast<double>(h.size());
  FieldValue out;
  out.value = phi * h / n;
  out.se.resize(phi.rows());
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    const Eigen::ArrayXd terms = phi.row(i).transpose().array() * h.array();
    const double var = (terms - out.value[i]).square().sum() / (n - 1.0);
    out.se[i] = std::sqrt(var / n);
  }
  return out;
}

void require_instance(const SymmetricInstance& in) {
  if (!(in.sigma > 0.0)) throw ConfigError("mean field: sigma must be positive");
  if (!(in.p >= 0.0 && in.p <= 1.0)) throw ConfigError("mean field: p must lie in [0, 1]");
}

double integrate_real_line(const std::function<double(double)>& g, const char* what) {
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double value = gauss_kronrod<double, 61>::integrate(g, -inf, inf, 20, 1e-13, &error);
  if (!std::isfinite(value) || error > 1e-9 * std::max(1.0, std::abs(value))) {
    throw NumericalError(std::string(what) + ": quadrature did not converge");
  }
  return value;
}

// Standard normal density.
double npdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

MonteCarloField::MonteCarloField(const SymmetricInstance& instance, const PhiSampler& sampler, Engine& rng,
                                 std::int64_t samples)
    : sigma2_(instance.sigma * instance.sigma) {
  require_instance(instance);
  phi_ = draw_phis(sampler, rng, samples);
  require_dim(instance.beta_star, phi_.rows(), "MonteCarloField: beta_star");
  std::bernoulli_distribution label(instance.p);
  std::normal_distribution<double> noise(0.0, instance.sigma);
  y_.resize(samples);
  for (std::int64_t j = 0; j < samples; ++j) {
    const double a = instance.beta_star.dot(phi_.col(j));
    y_[j] = (label(rng) ? a : -a) + noise(rng);
  }
}

FieldValue MonteCarloField::evaluate(const Vec& beta) const {
  require_dim(beta, phi_.rows(), "MonteCarloField: beta");
  const Vec u = phi_.transpose() * beta;
  Vec h(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) h[j] = y_[j] * clamped_tanh(u[j] * y_[j] / sigma2_) - u[j];
  return reduce(phi_, h);
}

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw ConfigError("Gauss-Hermite rule needs at least one node");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Mat jacobi = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
  GaussHermite rule;
  rule.nodes = es.eigenvalues();
  rule.weights = es.eigenvectors().row(0).transpose().array().square();
  rule.weights /= rule.weights.sum();
  return rule;
}

ConditionalField::ConditionalField(const SymmetricInstance& instance, const PhiSampler& sampler, Engine& rng,
                                   std::int64_t samples, int nodes)
    : sigma_(instance.sigma), rule_(gauss_hermite(nodes)) {
  require_instance(instance);
  phi_ = draw_phis(sampler, rng, samples);
  require_dim(instance.beta_star, phi_.rows(), "ConditionalField: beta_star");
  signal_ = phi_.transpose() * instance.beta_star;
  // The rule's error on the identity E[y tanh(a y / s^2)] = a, per unit of a.
  // Adding b times it back makes b = +-a and b = 0 exact zeros of every term.
  defect_.resize(signal_.size());
  for (Eigen::Index j = 0; j < signal_.size(); ++j) {
    const double a = signal_[j];
    defect_[j] = a == 0.0 ? 0.0 : (a - conditional_mean(a, a)) / a;
  }
}

double ConditionalField::conditional_mean(double b, double a) const {
  // y tanh(b y / s^2) is even in y, so the label sign (and p) drops out.
  const double s2 = sigma_ * sigma_;
  double acc = 0.0;
  for (Eigen::Index m = 0; m < rule_.nodes.size(); ++m) {
    const double y = a + sigma_ * rule_.nodes[m];
    acc += rule_.weights[m] * y * clamped_tanh(b * y / s2);
  }
  return acc;
}

FieldValue ConditionalField::evaluate(const Vec& beta) const {
  require_dim(beta, phi_.rows(), "ConditionalField: beta");
  const Vec u = phi_.transpose() * beta;
  Vec h(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    h[j] = conditional_mean(u[j], signal_[j]) - u[j] + u[j] * defect_[j];
  }
  return reduce(phi_, h);
}

FieldValue mean_field_f(const Vec& beta, const SymmetricInstance& instance, const PhiSampler& sampler, Engine& rng,
                        std::int64_t samples) {
  return MonteCarloField(instance, sampler, rng, samples).evaluate(beta);
}

double lyapunov(const Vec& beta, const Mat& R, const Vec& beta_ref) {
  const Vec diff = beta - beta_ref;
  return 0.5 * diff.dot(R * diff);
}

Trajectory integrate(const OdeState& start, const Field& f, const Mat& G, double horizon, double step,
                     const Vec& beta_ref, int record_every) {
  const auto d = start.beta.size();
  if (start.R.rows() != d || G.rows() != d) throw InputError("integrate: R(0), G and beta(0) dimensions differ");
  if (!is_spd(start.R)) throw ConfigError("integrate: R(0) must be symmetric positive definite");
  if (!(step > 0.0) || !(horizon >= 0.0)) throw ConfigError("integrate: step must be positive, horizon non-negative");
  record_every = std::max(record_every, 1);

  const auto drift = [&](const Vec& beta, const Mat& R) {
    Eigen::LLT<Mat> llt(R);
    if (llt.info() != Eigen::Success) throw NumericalError("integrate: R(t) lost positive definiteness");
    return Vec(llt.solve(f(beta)));
  };
  const Mat r0_minus_g = start.R - G;
  const auto closed_form_error = [&](const Mat& R, double t) {
    return (R - (G + std::exp(-t) * r0_minus_g)).norm();
  };

  Trajectory out;
  Vec beta = start.beta;
  Mat R = start.R;
  const double t0 = start.t;
  const auto steps = static_cast<std::int64_t>(std::llround(horizon / step));

  const auto record = [&](double t) {
    const double err = closed_form_error(R, t - t0);
    out.max_r_error = std::max(out.max_r_error, err);
    return TrajectoryPoint{t, beta, lyapunov(beta, R, beta_ref), err};
  };
  out.points.push_back(record(t0));

  for (std::int64_t n = 1; n <= steps; ++n) {
    const Vec k1 = drift(beta, R);
    const Mat m1 = G - R;
    const Mat r2 = R + 0.5 * step * m1;
    const Vec k2 = drift(beta + 0.5 * step * k1, r2);
    const Mat m2 = G - r2;
    const Mat r3 = R + 0.5 * step * m2;
    const Vec k3 = drift(beta + 0.5 * step * k2, r3);
    const Mat m3 = G - r3;
    const Mat r4 = R + step * m3;
    const Vec k4 = drift(beta + step * k3, r4);
    const Mat m4 = G - r4;

    beta += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    R += (step / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    symmetrize(R);

    const double t = t0 + static_cast<double>(n) * step;
    const double err = closed_form_error(R, t - t0);
    out.max_r_error = std::max(out.max_r_error, err);
    if (n % record_every == 0 || n == steps) out.points.push_back(TrajectoryPoint{t, beta, lyapunov(beta, R, beta_ref), err});
  }
  out.final_state = OdeState{beta, R, t0 + static_cast<double>(steps) * step};
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  const Eigen::Index d = trajectory.points.empty() ? 0 : trajectory.points.front().beta.size();
  CsvWriter w(os);
  w.header(columns("t", vector_columns("beta", d), "V", "R_frobenius_err"));
  for (const auto& p : trajectory.points) w.row().value(p.t).values(p.beta).value(p.V).value(p.r_error).end();
}

double lemma3_oracle(double a, double sigma, double p) {
  if (!(sigma > 0.0)) throw ConfigError("lemma3_oracle: sigma must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("lemma3_oracle: p must lie in [0, 1]");
  const double s2 = sigma * sigma;
  // Each mixture component in its own standardized variable y = +-a + sigma u.
  const auto component = [&](double mean) {
    return integrate_real_line(
        [&](double u) {
          const double y = mean + sigma * u;
          return y * clamped_tanh(a * y / s2) * npdf(u);
        },
        "lemma3_oracle");
  };
  return p * component(a) + (1.0 - p) * component(-a);
}

double lemma5_integral(double c, double x, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("lemma5: sigma must be positive");
  const double s2 = sigma * sigma;
  // w = sigma u, dw = sigma du.
  return sigma * integrate_real_line(
                     [&](double u) {
                       const double w = sigma * u;
                       const double f = (w + x) * clamped_tanh(c * (w + x) / s2) +
                                        (w - x) * clamped_tanh(c * (w - x) / s2);
                       return f * std::exp(-0.5 * u * u);
                     },
                     "lemma5_integral");
}

MonotonicityVerdict lemma5_oracle(double c, std::span<const double> x_grid, double sigma) {
  if (!(c > 0.0)) throw ConfigError("lemma5_oracle: c must be positive");
  MonotonicityVerdict v;
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    if (!(x_grid[i] > 0.0) || (i > 0 && !(x_grid[i] > x_grid[i - 1]))) {
      throw ConfigError("lemma5_oracle: grid must be strictly increasing positives");
    }
    v.values.push_back(lemma5_integral(c, x_grid[i], sigma));
  }
  v.strictly_increasing = true;
  for (std::size_t i = 1; i < v.values.size(); ++i) {
    if (!(v.values[i] > v.values[i - 1])) v.strictly_increasing = false;
  }
  return v;
}

}  // namespace omlr
