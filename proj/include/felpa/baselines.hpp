#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "felpa/problem.hpp"

namespace felpa {

// Uniform split P/K; also the MM initial point.
Eigen::VectorXd uniform_allocate(const AllocationProblem& prob);

// Sum rate in bit/s/Hz over all devices.
double sum_rate(const Eigen::MatrixXd& gains, const Eigen::VectorXd& power_mw,
                double noise_mw);

struct SrmResult {
  Eigen::VectorXd power;
  double sum_rate = 0.0;
};

// Sum-rate maximization: projected gradient ascent on {p >= 0, sum p <= P}
// with Armijo backtracking, restarted from the uniform point plus seeded
// random feasible points. Best-effort on a nonconvex landscape; the achieved
// sum rate is reported so alternatives can be slotted in.
SrmResult srm_allocate(const AllocationProblem& prob, int restarts, double tol,
                       std::uint64_t seed);

}  // namespace felpa
