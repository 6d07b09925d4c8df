#pragma once

#include "omlr/asym_em.hpp"
#include "omlr/baseline_em.hpp"
#include "omlr/clustering.hpp"
#include "omlr/datagen.hpp"
#include "omlr/sym_em.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace omlr {

/// How estimator starting points are chosen.
struct InitPolicy {
  enum class Kind { fixed, kappa_box };
  Kind kind = Kind::fixed;
  /// kappa_box: every coordinate of beta_{0,i} ~ U(beta_i*^j - kappa, beta_i*^j + kappa).
  double kappa = 0.0;
  std::optional<Vec> theta1;  ///< fixed, asymmetric
  std::optional<Vec> theta2;  ///< fixed, asymmetric (nonzero)
  std::optional<Vec> beta0;   ///< fixed, symmetric (nonzero); falls back to theta2
  double p0_scale = 1.0;      ///< P0 = p0_scale * I
};

struct PopEmConfig {
  std::int64_t n_samples = 5000;
  int iterations = 20;
  EStepForm e_step = EStepForm::stable;
};

/// Symmetric d-dimensional instance with phi ~ N(0, covariance) for the ODE lab.
struct OdeConfig {
  Vec beta_star = (Vec(2) << 1.0, -0.5).finished();
  double sigma = 1.0;
  double p = 0.5;
  Mat covariance = Mat::Identity(2, 2);
  Vec beta0 = (Vec(2) << 0.3, 0.8).finished();
  double r0_scale = 1.5;  ///< R(0) = r0_scale * G
  double horizon = 50.0;
  double step = 5e-2;
  enum class FieldKind { conditional, monte_carlo };
  FieldKind field = FieldKind::conditional;
  std::int64_t phi_samples = 2000;  ///< conditional field
  int gh_nodes = 64;
  std::int64_t mc_samples = 200000;  ///< Monte Carlo field
  int record_every = 10;
};

struct ExperimentConfig {
  ModelSpec model;
  std::int64_t horizon = 100000;
  int replications = 1;
  std::uint64_t seed = 1;
  std::vector<double> kappa_grid{0.0, 5.0, 10.0, 15.0, 20.0};
  PopEmConfig pop_em;
  InitPolicy init;
  std::filesystem::path output_dir = "out";
  bool whiten = false;
  /// Noise level assumed by the estimators; unset means max(model sigma, 1e-3).
  std::optional<double> estimator_sigma;
  double convergence_tol = 0.05;
  std::int64_t trace_stride = 1;
  int threads = 1;
  std::int64_t eval_points = 100000;
  std::int64_t bound_samples = 1000000;
  double j_tolerance = 0.05;
  ResidualSource residual = ResidualSource::pre_update;
  OdeConfig ode;

  double estimator_sigma2() const;
  void validate() const;
};

/// Simulation defaults: d = 3, beta1* = [1 15 13], beta2* = [-10 -11 -12],
/// phi_{k+1} = 0.5 phi_k + e, e ~ N(0, I), sigma = 1, p = 1/2,
/// theta_{0,1} = [15 20 100], theta_{0,2} = [-42 -35 -30], P0 = I.
ExperimentConfig default_config();

/// Same regressor and noise with the symmetric model beta* = [1 15 13].
ExperimentConfig default_symmetric_config();

/// Parses the JSON config; keys absent from the document keep the values of `base`.
ExperimentConfig parse_config(std::string_view json_text, const ExperimentConfig& base = default_config());
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base = default_config());

/// Seeds are derived per (group, replication) so results do not depend on execution order.
std::uint64_t replication_key(std::uint64_t group, std::uint64_t replication);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

/// Source of observations for the online runs.
using ObservationSource = std::function<Observation()>;

struct TraceOptions {
  std::ostream* csv = nullptr;
  std::int64_t stride = 1;
};

struct SymRunResult {
  Vec beta;  ///< in raw regressor coordinates
  double err_aligned = 0.0;
  ClusterReport report;
  std::int64_t steps = 0;
};

/// Online EM on the symmetric model with online clustering of every sample
/// (classified with beta_k before the update). Trace: k,beta_1..beta_d,err_aligned.
SymRunResult run_sym_stream(const ObservationSource& source, std::int64_t horizon, SymState init,
                            const Vec& beta_star, bool whiten, const TraceOptions& trace = {});

struct AsymRunResult {
  BetaPair betas;  ///< raw regressor coordinates
  Alignment alignment;
  ClusterReport report;
  std::int64_t steps = 0;
};

/// Two-step online EM with online clustering. Trace:
/// k,beta1_1..beta1_d,beta2_1..beta2_d,err1,err2[,J] (J when with_j).
AsymRunResult run_asym_stream(const ObservationSource& source, std::int64_t horizon, AsymState init,
                              const GroundTruth& truth, bool whiten, ResidualSource residual,
                              const TraceOptions& trace = {}, bool with_j = false);

/// Starting estimates drawn for one replication.
struct InitDraw {
  Vec beta1;
  Vec beta2;
  int redraws = 0;  ///< zero-theta2 draws discarded
};
InitDraw draw_kappa_init(const GroundTruth& truth, double kappa, Engine& rng);

struct Fig2Row {
  double kappa = 0.0;
  int replications = 0;
  int online_converged = 0;
  int pop_em_converged = 0;
  int pop_em_aborted = 0;
  int redraws = 0;

  double online_fraction() const { return replications ? double(online_converged) / replications : 0.0; }
  double pop_em_fraction() const { return replications ? double(pop_em_converged) / replications : 0.0; }
};

/// Convergence table: for every kappa, `replications` runs of the online
/// estimator (horizon steps) and of population EM (n_samples, iterations),
/// both from the same kappa-box starting points.
std::vector<Fig2Row> fig2_table(const ExperimentConfig& config);

/// Empirical clustering performance next to the theoretical limits.
struct BoundsReport {
  bool symmetric = true;
  std::int64_t n = 0;
  double J = 0.0;              ///< estimated-parameter classifier
  double correct_rate = 0.0;   ///< estimated-parameter classifier
  double J_true = 0.0;         ///< true-parameter classifier
  double correct_rate_true = 0.0;
  double bound_mc = 0.0;
  double bound_se = 0.0;
  std::optional<double> bound_closed_form;  ///< Gaussian regressor laws only
  double j_limit = 0.0;
  double j_limit_se = 0.0;
  double estimate_error = 0.0;  ///< aligned error of the trained estimate(s), max over components
};

BoundsReport bounds_report(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct ExperimentOutcome {
  std::vector<CheckResult> checks;
  std::vector<std::filesystem::path> files;
  bool ok() const;
};

/// CLI verbs. Each writes its files under config.output_dir.
ExperimentOutcome run_simulate(const ExperimentConfig& config);
ExperimentOutcome run_fit_sym(const ExperimentConfig& config, const std::vector<Observation>* input = nullptr);
ExperimentOutcome run_fit_asym(const ExperimentConfig& config, const std::vector<Observation>* input = nullptr);
ExperimentOutcome run_fit_pop_em(const ExperimentConfig& config, const std::vector<Observation>* input = nullptr);
ExperimentOutcome run_ode(const ExperimentConfig& config);
ExperimentOutcome run_fig1(const ExperimentConfig& config);
ExperimentOutcome run_fig2(const ExperimentConfig& config);
ExperimentOutcome run_bounds(const ExperimentConfig& config);

}  // namespace omlr
