#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "oscstab/variational.hpp"

namespace oscstab {

struct PerturbationSpec {
  int count = 10;            // must be even and >= 10 (members come in +/- pairs)
  double amplitude = 1e-3;   // L2 norm of every member
  std::uint64_t seed = 0;
  int basis_size = 4;        // low-order Hermite modes mixed into each member
  bool perturb_f = true;     // delta F can be zero
};

struct PerturbationEnsemble {
  std::vector<SampledFunction> deltas_psi;
  std::vector<SampledFunction> deltas_f;  // all-zero when spec.perturb_f is false
  PerturbationSpec spec;
};

struct StabilityVerdict {
  double drift = 0.0;               // l2 distance rigid -> optimum, psi plus F
  double residual_at_rigid = 0.0;
  double residual_at_optimum = 0.0;
  bool stable = false;
  double kappa = 10.0;
  double amplitude = 0.0;
};

struct ToyEnsemble {
  std::vector<std::pair<double, double>> deltas;  // (dx_i, dy_i)
  double amplitude = 0.0;
  std::uint64_t seed = 0;
};

/// Seeded random Hermite-mode mixtures, rescaled to the requested amplitude
/// and generated in +/- pairs so the ensemble is closed under negation.
PerturbationEnsemble generate_ensemble(const PerturbationSpec& spec, const Grid& grid,
                                       double omega);

/// Signed residuals of the four perturbed equalities, stacked per member:
/// [balance_q, balance_l, norm_f - 1, norm_psi - 1]. Length 4 * count.
Eigen::VectorXd assemble_residuals(const EecState& state,
                                   const PerturbationEnsemble& ensemble);

/// Least-squares optimum of the stacked residuals, gradient descent with
/// backtracking from init. Never returns a state worse than init.
EecState optimize_overdetermined(const EecState& init,
                                 const PerturbationEnsemble& ensemble,
                                 const SolveOptions& options);

/// Stable iff drift <= kappa * amplitude (boundary inclusive).
StabilityVerdict classify(const EecState& rigid, const PerturbationEnsemble& ensemble,
                          const SolveOptions& options, double kappa = 10.0);

/// (x + dx)^2 - (y + dy)^2.
double toy_residual(double x, double y, double dx, double dy);

/// Gaussian (dx_i, dy_i) with standard deviation amplitude, clamped to
/// 3 * amplitude.
ToyEnsemble generate_toy_ensemble(int count, double amplitude, std::uint64_t seed);

/// Minimizes sum_i toy_residual(x, y, dx_i, dy_i)^2 by gradient descent with
/// backtracking. Deterministic given its inputs.
std::pair<double, double> toy_optimize(const ToyEnsemble& ensemble,
                                       std::pair<double, double> init);

double toy_objective(const ToyEnsemble& ensemble, double x, double y);

/// g(x) = (x + dx)^2 - (x + dy)^2 sampled pointwise.
std::vector<std::pair<double, double>> toy_g_profile(const std::vector<double>& x_values,
                                                     double dx, double dy);

struct DensityCurves {
  Eigen::VectorXd x;
  Eigen::VectorXd ideal;  // |psi|^2
  Eigen::VectorXd real;   // |psi + delta|^2
};

DensityCurves density_comparison(const EecState& state, const SampledFunction& delta);

}  // namespace oscstab
