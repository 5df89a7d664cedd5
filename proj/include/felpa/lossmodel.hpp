#pragma once

#include <utility>
#include <vector>

namespace felpa {

// Fitted power-law expected-loss model  loss(n) ~= a * n^(-b).
struct LossCurve {
  double a = 0.0;
  double b = 0.0;
  double residual = 0.0;  // mean squared fit error on the original scale
  // False when Gauss-Newton refinement failed and the curve fell back to the
  // closed-form log-log estimate (or a clamped exponent).
  bool refined = true;
};

struct LossPoint {
  double n;     // dataset size, >= 1
  double loss;  // > 0
};

// Nonlinear least squares on the original scale: log-log linear fit for the
// starting point, then Gauss-Newton with step halving. Throws
// std::invalid_argument on degenerate input (< 2 distinct n, n < 1, loss <= 0).
LossCurve fit_power_law(const std::vector<LossPoint>& points);

double expected_loss(const LossCurve& curve, double n);

// Data-deficit factor alpha = ((cap - collected) / cap)^2.
double data_deficit(double cap, double collected);

// Constants of the smoothness / gradient-noise assumptions plus the initial
// optimality gap C = F(w(0)) - F(w*).
struct BoundParams {
  double xi1 = 0.0;
  double xi2 = 0.0;
  double lipschitz = 0.0;
  double initial_gap = 0.0;
  void validate() const;  // xi1 >= 0, xi2 > 0, lipschitz > 0
};

// Expected-optimality-gap bound
//   (4 xi2 a)^t * (C + 2 a xi1 / ((1 - 4 xi2 a) L)) + 2 a xi1 / ((1 - 4 xi2 a) L).
// Throws ContractionError when 4*xi2*alpha >= 1.
double convergence_bound(const BoundParams& params, double alpha, int t);

// Strict lower bound on the collected-sample count required for the
// contraction to hold: max(0, D - D / (2 sqrt(xi2))). Callers need
// collected > returned value.
double min_samples(double cap, double xi2);

struct GradMoment {
  double per_sample_sq_norm;  // E ||grad f(w | s)||^2 over samples
  double full_sq_norm;        // ||grad F(w)||^2
};

struct XiEstimate {
  double xi1 = 0.0;
  double xi2 = 0.0;
  double residual = 0.0;  // mean squared residual of the linear fit
};

// Least-squares fit of E||grad f||^2 ~= xi1 + xi2 * ||grad F||^2, clamped to
// xi1 >= 0, xi2 > 0. These are conservative empirical estimates; the
// assumption itself is an upper bound. Throws std::invalid_argument when all
// full-gradient norms coincide (slope unidentifiable) or on < 2 observations.
XiEstimate estimate_xi(const std::vector<GradMoment>& observations);

// Conservative variant: the fitted line is shifted up until `coverage` of the
// observations lie on or below it.
XiEstimate estimate_xi_conservative(const std::vector<GradMoment>& observations,
                                    double coverage);

}  // namespace felpa
