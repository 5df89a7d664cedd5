#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "felpa/problem.hpp"

namespace felpa {

enum class SolveStatus { kConverged, kMaxIter, kRegimeExit };
std::string to_string(SolveStatus status);

struct MmSettings {
  double outer_tol = 1e-6;     // stop on ||p(t) - p(t-1)||
  double inner_tol = 1e-7;     // projected-gradient residual of the subproblem
  int max_outer = 100;
  int max_inner = 5000;        // accelerated-gradient steps per multiplier round
  double inner_penalty = 10.0; // initial augmented-Lagrangian penalty
  void validate() const;
};

struct AllocationResult {
  Eigen::VectorXd power;              // mW, budget-feasible, nonnegative
  std::vector<double> objective_trace; // Phi per outer iteration (front = init)
  std::vector<double> step_norm_trace; // ||dp|| per accepted outer step
  std::vector<double> mse_trace;       // FoM stopping metric; empty for MM
  int iterations = 0;
  SolveStatus status = SolveStatus::kMaxIter;
  double wall_time_s = 0.0;
};

// One convex subproblem: minimize Phi~(. | p_t) subject to the per-node
// sample-surplus constraints, optionally Phi~ <= D^2/2, and the budget set
// {p >= 0, sum p <= P}. Accelerated projected gradient inside an augmented
// Lagrangian on the two nonlinear constraint families. Returns an iterate
// with Phi~(p | p_t) <= Phi~(p_t | p_t); throws SolverError when that
// sufficient decrease cannot be reached.
Eigen::VectorXd solve_inner(const AllocationProblem& prob,
                            const Eigen::VectorXd& p_t,
                            const MmSettings& settings,
                            double step_scale = 1.0);

// Outer MM loop: start from the uniform point P/K, majorize at the current
// iterate, solve the subproblem, repeat. Devices with zero direct gain are
// pinned to zero power before solving. Regime exit (sample target met,
// psi >= 0) is a successful stop.
AllocationResult solve_mm(const AllocationProblem& prob,
                          const MmSettings& settings);

}  // namespace felpa
