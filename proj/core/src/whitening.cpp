#include "omlr/whitening.hpp"

#include "omlr/errors.hpp"

namespace omlr {
namespace {
constexpr double kMinEigenvalue = 1e-10;
}

WhitenState update_covariance(WhitenState state, const Vec& phi) {
  require_dim(phi, state.rbar.rows(), "update_covariance: phi");
  state.k += 1;
  const double step = 1.0 / static_cast<double>(state.k);
  state.rbar += step * (phi * phi.transpose() - state.rbar);
  symmetrize(state.rbar);
  return state;
}

std::optional<Vec> whiten(const WhitenState& state, const Vec& phi) {
  require_dim(phi, state.rbar.rows(), "whiten: phi");
  auto root = inverse_sqrt_spd(state.rbar, kMinEigenvalue);
  if (!root) return std::nullopt;
  return Vec(*root * phi);
}

Whitener::Whitener(Eigen::Index d) : state_(WhitenState::identity(d)), transform_(Mat::Identity(d, d)) {}

Vec Whitener::apply(const Vec& phi) {
  state_ = update_covariance(std::move(state_), phi);
  const auto d = state_.rbar.rows();
  if (state_.k >= 2 * d) {
    if (auto root = inverse_sqrt_spd(state_.rbar, kMinEigenvalue)) {
      transform_ = std::move(*root);
      engaged_ = true;
    }
  }
  return engaged_ ? Vec(transform_ * phi) : phi;
}

}  // namespace omlr
