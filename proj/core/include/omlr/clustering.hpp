#pragma once

#include "omlr/asym_em.hpp"
#include "omlr/linalg.hpp"
#include "omlr/rng.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace omlr {

/// Symmetric rule: argmin_i (y - (-1)^i beta^T phi)^2. Index 2 is the +beta
/// branch, index 1 the -beta branch; an exact tie goes to 1.
int classify_sym(const Vec& beta, const Vec& phi, double y);

/// Asymmetric rule: argmin_i (y - beta_i^T phi)^2, ties to 1.
int classify_asym(const Vec& beta1, const Vec& beta2, const Vec& phi, double y);

/// Squared residual of the branch chosen by classify_sym.
double sym_residual_sq(const Vec& beta, const Vec& phi, double y, int index);

/// Whether a symmetric-rule index matches the hidden label, after resolving
/// the sign ambiguity of beta against beta* (nearest of +-beta*).
bool sym_correct(int index, int z, const Vec& beta, const Vec& beta_star);

/// Whether an asymmetric-rule index matches the hidden label under the
/// estimate-to-truth assignment of `alignment`.
bool asym_correct(int index, int z, const Alignment& alignment);

/// Running within-cluster error. Reports form a monoid under merge().
struct ClusterReport {
  std::int64_t n = 0;
  double sum_sq = 0.0;
  std::int64_t correct = 0;
  bool keep_trace = false;
  std::vector<double> per_step;  ///< J after each update, when keep_trace

  double J() const { return n ? sum_sq / static_cast<double>(n) : 0.0; }
  double correct_rate() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }

  ClusterReport& merge(const ClusterReport& other);
};

ClusterReport update_report(ClusterReport report, double residual_sq, bool was_correct);

enum class MixtureKind { symmetric, asymmetric };

/// Inputs of the asymptotic clustering bounds. `direction` is beta* for the
/// symmetric model and beta1* - beta2* for the asymmetric one.
struct BoundInputs {
  MixtureKind kind = MixtureKind::symmetric;
  Vec direction;
  double sigma = 1.0;
  std::function<Vec(Engine&)> phi_sampler;  ///< draws from the stationary regressor law
};

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// Lower bound on the limiting probability of correct classification:
/// 1 - E[exp(-(beta*^T phi)^2 / (2 sigma^2))] (symmetric) or
/// 1 - E[exp(-((b1*-b2*)^T phi)^2 / (8 sigma^2))] (asymmetric). Monte Carlo.
McEstimate classification_bound_mc(const BoundInputs& in, Engine& rng, std::int64_t samples);

/// Same bound for phi ~ N(0, Sigma) in closed form; quadform is v^T Sigma v
/// for the relevant direction v.
double classification_bound_gaussian(double quadform, double sigma, MixtureKind kind);

/// eta(phi) as a function of s = direction^T phi; always <= 0.
double eta(double s, double sigma, MixtureKind kind);

/// Limit of the within-cluster error: sigma^2 + 4 E[eta] (symmetric) or
/// sigma^2 + E[eta] (asymmetric). Throws NumericalError if any sampled eta > 1e-12.
McEstimate j_limit(const BoundInputs& in, Engine& rng, std::int64_t samples);

}  // namespace omlr
