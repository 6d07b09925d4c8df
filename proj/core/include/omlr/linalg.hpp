#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string_view>

namespace omlr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// (M + M^T) / 2, in place.
void symmetrize(Mat& m);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& sym);

/// True when `m` is symmetric (to a relative 1e-12) and its smallest
/// eigenvalue exceeds `tol * max(1, largest eigenvalue)`.
bool is_spd(const Mat& m, double tol = 1e-12);

/// Spectral radius of a square (not necessarily symmetric) matrix.
double spectral_radius(const Mat& m);

/// Symmetric inverse square root S^{-1/2} through the eigendecomposition.
/// Returns nullopt when the smallest eigenvalue is below `min_eig`.
std::optional<Mat> inverse_sqrt_spd(const Mat& s, double min_eig = 1e-10);

/// Stationary covariance of x_{k+1} = A x_k + e_{k+1}, e ~ N(0, Q):
/// the solution of S = A S A^T + Q (doubling iteration). Requires rho(A) < 1.
Mat stationary_ar1_covariance(const Mat& a, const Mat& q);

/// Throws InputError when `v.size() != d`.
void require_dim(const Vec& v, Eigen::Index d, std::string_view what);

}  // namespace omlr
