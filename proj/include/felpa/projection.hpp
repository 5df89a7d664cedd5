#pragma once

#include <Eigen/Dense>

namespace felpa {

// Exact Euclidean projection onto {p >= 0, sum(p) <= budget}. If clamping to
// the nonnegative orthant already satisfies the budget that clamp is the
// projection; otherwise the budget is active and the point is projected onto
// the simplex {p >= 0, sum(p) = budget} by soft-thresholding.
Eigen::VectorXd project_budget(const Eigen::VectorXd& v, double budget);

// Projection onto the simplex {p >= 0, sum(p) = budget}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double budget);

}  // namespace felpa
