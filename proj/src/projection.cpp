#include "felpa/projection.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace felpa {

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double budget) {
  if (!(budget > 0)) throw std::domain_error("project_simplex: budget must be positive");
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // Largest rho with sorted[rho-1] - (prefix(rho) - budget)/rho > 0.
  double prefix = 0.0;
  double tau = 0.0;
  int rho = 0;
  for (int j = 0; j < static_cast<int>(sorted.size()); ++j) {
    prefix += sorted[j];
    const double candidate = (prefix - budget) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0) {
      tau = candidate;
      rho = j + 1;
    }
  }
  (void)rho;
  return (v.array() - tau).max(0.0);
}

Eigen::VectorXd project_budget(const Eigen::VectorXd& v, double budget) {
  if (!(budget > 0)) throw std::domain_error("project_budget: budget must be positive");
  Eigen::VectorXd clamped = v.cwiseMax(0.0);
  if (clamped.sum() <= budget) return clamped;
  return project_simplex(v, budget);
}

}  // namespace felpa
