#include "omlr/linalg.hpp"

#include "omlr/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace omlr {

void symmetrize(Mat& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

double min_eigenvalue(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_spd(const Mat& m, double tol) {
  if (m.rows() == 0 || m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev.minCoeff() > tol * std::max(1.0, ev.maxCoeff());
}

double spectral_radius(const Mat& m) {
  Eigen::EigenSolver<Mat> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::optional<Mat> inverse_sqrt_spd(const Mat& s, double min_eig) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Vec& ev = es.eigenvalues();
  if (!(ev.minCoeff() >= min_eig)) return std::nullopt;
  const Mat& u = es.eigenvectors();
  Mat out = u * ev.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose();
  symmetrize(out);
  return out;
}

Mat stationary_ar1_covariance(const Mat& a, const Mat& q) {
  if (spectral_radius(a) >= 1.0) {
    throw ConfigError("AR(1) coefficient matrix must have spectral radius < 1");
  }
  // S = sum_j A^j Q (A^T)^j, summed by squaring: S_{n+1} = S_n + A_n S_n A_n^T, A_{n+1} = A_n^2.
  Mat s = q;
  Mat an = a;
  for (int it = 0; it < 64; ++it) {
    Mat inc = an * s * an.transpose();
    s += inc;
    an = (an * an).eval();
    if (inc.cwiseAbs().maxCoeff() <= 1e-16 * s.cwiseAbs().maxCoeff()) break;
  }
  symmetrize(s);
  return s;
}

void require_dim(const Vec& v, Eigen::Index d, std::string_view what) {
  if (v.size() != d) {
    throw InputError(std::string(what) + ": expected dimension " + std::to_string(d) +
                     ", got " + std::to_string(v.size()));
  }
}

}  // namespace omlr
