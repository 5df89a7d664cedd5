#pragma once

#include <stdexcept>
#include <string>

namespace felpa {

// Error taxonomy mirrors the CLI exit-code contract:
//   ConfigError -> 2, SolverError -> 3, IoError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by the convergence-bound calculator when 4*xi2*alpha >= 1,
// i.e. the collected dataset is too small for the contraction to hold.
struct ContractionError : std::domain_error {
  ContractionError(double xi2, double alpha)
      : std::domain_error("contraction violated: 4*xi2*alpha = " +
                          std::to_string(4.0 * xi2 * alpha) + " >= 1"),
        xi2(xi2),
        alpha(alpha) {}
  double xi2;
  double alpha;
};

}  // namespace felpa
