#pragma once

// Small helpers shared by the unit and acceptance tests. Reference
// computations here deliberately avoid the library code paths they check.

#include "omlr/linalg.hpp"
#include "omlr/rng.hpp"

#include <cmath>
#include <random>

namespace omlr::testing {

inline Vec random_vec(Engine& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n01;
  Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * n01(rng);
  return v;
}

/// Well-conditioned SPD matrix: B B^T / d + I.
inline Mat random_spd(Engine& rng, Eigen::Index d) {
  Mat b(d, d);
  std::normal_distribution<double> n01;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) b(i, j) = n01(rng);
  }
  return b * b.transpose() / static_cast<double>(d) + Mat::Identity(d, d);
}

inline double rel_error(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace omlr::testing
