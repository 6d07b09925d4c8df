#include "omlr/datagen.hpp"

#include "omlr/csv.hpp"
#include "omlr/errors.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace omlr {
namespace {

Mat checked_cholesky(const Mat& cov, const char* what) {
  if (!is_spd(cov)) throw ConfigError(std::string(what) + " must be symmetric positive definite");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigError(std::string(what) + ": Cholesky failed");
  return llt.matrixL();
}

}  // namespace

RegressorProcess::RegressorProcess(RegressorKind kind, Eigen::Index dim)
    : kind_(std::move(kind)), dim_(dim) {}

RegressorProcess RegressorProcess::iid_gaussian(Mat covariance) {
  const auto d = covariance.rows();
  if (d == 0 || covariance.cols() != d) throw ConfigError("regressor covariance must be square and non-empty");
  RegressorProcess rp(IidGaussian{covariance}, d);
  rp.stationary_chol_ = checked_cholesky(covariance, "regressor covariance");
  rp.stationary_cov_ = std::move(covariance);
  return rp;
}

RegressorProcess RegressorProcess::ar1(Mat a, Mat innovation_cov) {
  const auto d = a.rows();
  if (d == 0 || a.cols() != d || innovation_cov.rows() != d || innovation_cov.cols() != d) {
    throw ConfigError("AR(1) matrices must be square with matching dimension");
  }
  if (!(spectral_radius(a) < 1.0)) throw ConfigError("AR(1) coefficient matrix must have spectral radius < 1");
  RegressorProcess rp(Ar1{a, innovation_cov}, d);
  rp.innovation_chol_ = checked_cholesky(innovation_cov, "innovation covariance");
  rp.stationary_cov_ = stationary_ar1_covariance(a, innovation_cov);
  rp.stationary_chol_ = checked_cholesky(rp.stationary_cov_, "stationary covariance");
  rp.state_ = Vec::Zero(d);
  return rp;
}

RegressorProcess RegressorProcess::sphere_uniform(Eigen::Index d, double radius) {
  if (d <= 0) throw ConfigError("sphere regressor dimension must be positive");
  if (!(radius > 0.0)) throw ConfigError("sphere radius must be positive");
  RegressorProcess rp(SphereUniform{d, radius}, d);
  rp.stationary_cov_ = Mat::Identity(d, d) * (radius * radius / static_cast<double>(d));
  return rp;
}

Vec RegressorProcess::gaussian(Engine& rng, const Mat& chol) const {
  std::normal_distribution<double> n01;
  Vec g(dim_);
  for (Eigen::Index i = 0; i < dim_; ++i) g[i] = n01(rng);
  return chol * g;
}

Vec RegressorProcess::draw_stationary(Engine& rng) const {
  if (const auto* s = std::get_if<SphereUniform>(&kind_)) {
    std::normal_distribution<double> n01;
    Vec g(dim_);
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < dim_; ++i) g[i] = n01(rng);
      norm = g.norm();
    } while (norm == 0.0);
    return g * (s->radius / norm);
  }
  return gaussian(rng, stationary_chol_);
}

void RegressorProcess::reset(Engine& rng) {
  if (std::holds_alternative<Ar1>(kind_)) state_ = gaussian(rng, stationary_chol_);
}

Vec RegressorProcess::next(Engine& innovations) {
  if (const auto* ar = std::get_if<Ar1>(&kind_)) {
    state_ = ar->a * state_ + gaussian(innovations, innovation_chol_);
    return state_;
  }
  return draw_stationary(innovations);
}

void ModelSpec::validate() const {
  if (d <= 0) throw ConfigError("model dimension must be positive");
  if (beta1_star.size() != d || beta2_star.size() != d) throw ConfigError("beta vectors must have length d");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and non-negative");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("mixing probability p must lie in (0, 1)");
  if (regressor.dim() != d) throw ConfigError("regressor dimension does not match model dimension");
}

bool ModelSpec::symmetric() const {
  return beta1_star.size() == beta2_star.size() && beta1_star == -beta2_star;
}

ModelSpec make_symmetric_model(const Vec& beta_star, double sigma, double p, RegressorProcess regressor) {
  ModelSpec m;
  m.d = beta_star.size();
  m.beta1_star = beta_star;
  m.beta2_star = -beta_star;
  m.sigma = sigma;
  m.p = p;
  m.regressor = std::move(regressor);
  m.validate();
  return m;
}

int sample_label(Engine& rng, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("mixing probability p must lie in (0, 1)");
  std::bernoulli_distribution coin(p);
  return coin(rng) ? 1 : -1;
}

Observation emit(const ModelSpec& model, const Vec& phi, int z, Engine& noise) {
  require_dim(phi, model.d, "emit: phi");
  const Vec& beta = z == 1 ? model.beta1_star : model.beta2_star;
  double w = 0.0;
  if (model.sigma > 0.0) w = std::normal_distribution<double>(0.0, model.sigma)(noise);
  return Observation{0, phi, beta.dot(phi) + w, z};
}

StreamGenerator::StreamGenerator(ModelSpec model, std::uint64_t seed, std::uint64_t replication)
    : model_(std::move(model)), streams_(seed, replication) {
  model_.validate();
  model_.regressor.reset(streams_.regressor_init);
}

Observation StreamGenerator::next() {
  const int z = sample_label(streams_.labels, model_.p);
  Vec phi = model_.regressor.next(streams_.innovations);
  Observation obs = emit(model_, phi, z, streams_.noise);
  obs.k = ++k_;
  return obs;
}

std::vector<Observation> StreamGenerator::take(std::int64_t n) {
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)));
  for (std::int64_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

void write_stream_csv(std::ostream& os, const std::vector<Observation>& stream) {
  const Eigen::Index d = stream.empty() ? 0 : stream.front().phi.size();
  CsvWriter w(os);
  w.header(columns("k", vector_columns("phi", d), "y", "z"));
  for (const auto& o : stream) {
    w.row().integer(o.k).values(o.phi).value(o.y).integer(o.z).end();
  }
}

std::vector<Observation> read_stream_csv(std::istream& is) {
  std::vector<Observation> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  const auto head = split_csv_line(line);
  if (head.size() < 4 || head.front() != "k" || head[head.size() - 2] != "y" || head.back() != "z") {
    throw InputError("stream CSV header must be k,phi_1..phi_d,y,z");
  }
  const auto d = static_cast<Eigen::Index>(head.size() - 3);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != head.size()) throw InputError("stream CSV row has wrong number of columns");
    Observation o;
    o.k = std::stoll(cells[0]);
    o.phi.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) o.phi[i] = std::stod(cells[static_cast<std::size_t>(i) + 1]);
    o.y = std::stod(cells[cells.size() - 2]);
    o.z = std::stoi(cells.back());
    if (o.z != 1 && o.z != -1) throw InputError("stream CSV label must be +1 or -1");
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace omlr
