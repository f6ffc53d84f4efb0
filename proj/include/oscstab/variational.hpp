#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "oscstab/eec.hpp"
#include "oscstab/spectrum.hpp"

namespace oscstab {

struct SolveOptions {
  int max_iterations = 40000;          // total inner-descent step budget
  double gradient_tolerance = 1e-3;
  double constraint_tolerance = 1e-3;
  double penalty_growth = 10.0;
  bool paired_mode = false;            // eliminate F as the inverse transform of psi
  std::uint64_t seed = 0;              // recorded for reproducibility of the init
};

struct VariationalResult {
  EecState state;
  Multipliers multipliers;             // estimated from the converged penalty terms
  double objective = 0.0;
  EecResidual constraint_residuals;
  std::array<double, 2> stationarity = {0.0, 0.0};
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace; // objective per outer iteration
  double descent_violation = 0.0;      // max inner-step increase of the augmented value
};

/// L2 norms of the two stationarity-ODE left-hand sides, compact
/// finite-difference stencil on the grid interior.
std::pair<double, double> stationarity_residual(const EecState& state,
                                                const Multipliers& m);

/// Augmented-Lagrangian descent on I(psi, F) subject to the two balance and
/// two normalization equalities; backtracking gradient steps in the inner
/// loop. Non-convergence is returned (converged = false), never thrown.
VariationalResult solve(const EecState& init, const SolveOptions& options);

struct QuantizationEntry {
  double energy = 0.0;
  int nearest_level = 0;
  double defect = 0.0;
};

/// Rejects unconverged inputs.
std::vector<QuantizationEntry> quantization_report(
    const std::vector<VariationalResult>& results);

/// Seeded random near-normalized init: complex mixtures of the lowest
/// basis_size Hermite states, independently for psi and F.
EecState random_init(const Grid& grid, double omega, int basis_size,
                     std::uint64_t seed);

}  // namespace oscstab
