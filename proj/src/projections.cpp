#include "resonator/projections.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace resonator {

Eigen::VectorXd soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& x, double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("soft_threshold: gamma must be >= 0");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double m = std::abs(x[i]) - gamma;
    out[i] = m > 0.0 ? std::copysign(m, x[i]) : 0.0;
  }
  return out;
}

namespace {

// Threshold tau such that sum max(v_i - tau, 0) = z (Held, Wolfe and Crowder).
double simplex_threshold(const Eigen::Ref<const Eigen::VectorXd>& v, double z) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - z) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) tau = candidate;
  }
  return tau;
}

}  // namespace

Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) throw std::invalid_argument("project_simplex: empty input");
  const double tau = simplex_threshold(v, 1.0);
  return (v.array() - tau).max(0.0).matrix();
}

Eigen::VectorXd project_l1_ball(const Eigen::Ref<const Eigen::VectorXd>& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_l1_ball: radius must be > 0");
  if (v.lpNorm<1>() <= radius) return v;
  const Eigen::VectorXd magnitude = v.cwiseAbs();
  const double tau = simplex_threshold(magnitude, radius);
  return soft_threshold(v, tau);
}

}  // namespace resonator
