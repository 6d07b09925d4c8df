#include "omlr/clustering.hpp"

#include "omlr/errors.hpp"

#include <cmath>
#include <numbers>

namespace omlr {
namespace {

// Phi(-x) and Phi'(x) for x >= 0; erfc keeps the tail accurate.
double normal_lower_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

void require_samples(std::int64_t samples) {
  if (samples < 1000) throw ConfigError("Monte Carlo bounds need at least 1000 samples");
}

void require_inputs(const BoundInputs& in) {
  if (!(in.sigma > 0.0)) throw ConfigError("bound inputs: sigma must be positive");
  if (!in.phi_sampler) throw ConfigError("bound inputs: phi sampler missing");
}

// Mean and standard error of a stream of values, Welford style.
struct Accumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double se() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0; }
};

}  // namespace

int classify_sym(const Vec& beta, const Vec& phi, double y) {
  const double s = beta.dot(phi);
  const double minus_branch = (y + s) * (y + s);  // i = 1
  const double plus_branch = (y - s) * (y - s);   // i = 2
  return plus_branch < minus_branch ? 2 : 1;
}

int classify_asym(const Vec& beta1, const Vec& beta2, const Vec& phi, double y) {
  const double r1 = y - beta1.dot(phi);
  const double r2 = y - beta2.dot(phi);
  return r2 * r2 < r1 * r1 ? 2 : 1;
}

double sym_residual_sq(const Vec& beta, const Vec& phi, double y, int index) {
  const double s = beta.dot(phi);
  const double r = index == 2 ? y - s : y + s;
  return r * r;
}

bool sym_correct(int index, int z, const Vec& beta, const Vec& beta_star) {
  const int sign = (beta - beta_star).norm() <= (beta + beta_star).norm() ? 1 : -1;
  const int predicted = index == 2 ? sign : -sign;
  return predicted == z;
}

bool asym_correct(int index, int z, const Alignment& alignment) {
  const int truth = z == 1 ? 1 : 2;
  return alignment.assignment[static_cast<std::size_t>(index - 1)] == truth;
}

ClusterReport& ClusterReport::merge(const ClusterReport& other) {
  n += other.n;
  sum_sq += other.sum_sq;
  correct += other.correct;
  if (keep_trace || other.keep_trace) {
    // Traces concatenate; J values of the right shard are rebased onto the merged prefix.
    const double base_sum = sum_sq - other.sum_sq;
    const std::int64_t base_n = n - other.n;
    for (std::size_t i = 0; i < other.per_step.size(); ++i) {
      const double m = static_cast<double>(i + 1);
      const double shard_sum = other.per_step[i] * m;
      per_step.push_back((base_sum + shard_sum) / (static_cast<double>(base_n) + m));
    }
  }
  return *this;
}

ClusterReport update_report(ClusterReport report, double residual_sq, bool was_correct) {
  report.n += 1;
  report.sum_sq += residual_sq;
  if (was_correct) report.correct += 1;
  if (report.keep_trace) report.per_step.push_back(report.J());
  return report;
}

McEstimate classification_bound_mc(const BoundInputs& in, Engine& rng, std::int64_t samples) {
  require_inputs(in);
  require_samples(samples);
  const double denom = in.kind == MixtureKind::symmetric ? 2.0 * in.sigma * in.sigma : 8.0 * in.sigma * in.sigma;
  Accumulator acc;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double s = in.direction.dot(in.phi_sampler(rng));
    acc.add(std::exp(-s * s / denom));
  }
  return {1.0 - acc.mean, acc.se()};
}

double classification_bound_gaussian(double quadform, double sigma, MixtureKind kind) {
  if (!(quadform >= 0.0)) throw ConfigError("quadratic form must be non-negative");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const double scale = kind == MixtureKind::symmetric ? sigma * sigma : 4.0 * sigma * sigma;
  return 1.0 - 1.0 / std::sqrt(1.0 + quadform / scale);
}

double eta(double s, double sigma, MixtureKind kind) {
  const double a = std::abs(s);
  if (kind == MixtureKind::symmetric) {
    const double x = a / sigma;
    return a * a * normal_lower_tail(x) - sigma * a * normal_pdf(x);
  }
  const double x = a / (2.0 * sigma);
  return a * a * normal_lower_tail(x) - 2.0 * sigma * a * normal_pdf(x);
}

McEstimate j_limit(const BoundInputs& in, Engine& rng, std::int64_t samples) {
  require_inputs(in);
  require_samples(samples);
  const double weight = in.kind == MixtureKind::symmetric ? 4.0 : 1.0;
  Accumulator acc;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double e = eta(in.direction.dot(in.phi_sampler(rng)), in.sigma, in.kind);
    if (e > 1e-12) throw NumericalError("j_limit: eta(phi) > 0, internal consistency failure");
    acc.add(e);
  }
  return {in.sigma * in.sigma + weight * acc.mean, weight * acc.se()};
}

}  // namespace omlr
