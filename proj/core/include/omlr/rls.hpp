#pragma once

#include "omlr/linalg.hpp"

namespace omlr {

/// Rank-one recursive least-squares gain: a = 1 / (1 + phi^T P phi) and P phi.
struct RlsGain {
  double a = 1.0;
  Vec p_phi;
};

inline RlsGain rls_gain(const Mat& p, const Vec& phi) {
  RlsGain g;
  g.p_phi = p * phi;
  g.a = 1.0 / (1.0 + phi.dot(g.p_phi));
  return g;
}

/// P <- P - a (P phi)(P phi)^T, re-symmetrized.
inline void rls_shrink(Mat& p, const RlsGain& g) {
  p.noalias() -= g.a * g.p_phi * g.p_phi.transpose();
  symmetrize(p);
}

}  // namespace omlr
