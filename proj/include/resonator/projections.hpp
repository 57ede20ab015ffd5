#pragma once

#include <Eigen/Core>

namespace resonator {

/// Entrywise sgn(x) max(|x| - gamma, 0). Requires gamma >= 0.
Eigen::VectorXd soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& x, double gamma);

/// Euclidean projection onto {x : sum x = 1, x >= 0}, by sorting (O(D log D)).
Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Euclidean projection onto {x : |x|_1 <= radius}. Points inside are returned
/// unchanged; otherwise |v| is projected onto the radius-scaled simplex and the
/// signs restored. Requires radius > 0.
Eigen::VectorXd project_l1_ball(const Eigen::Ref<const Eigen::VectorXd>& v, double radius = 1.0);

}  // namespace resonator
