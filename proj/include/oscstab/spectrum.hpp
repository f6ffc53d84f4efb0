#pragma once

#include <vector>

#include "oscstab/grid.hpp"

namespace oscstab {

/// Symmetric tridiagonal discretization of -1/2 d^2/dx^2 + curvature * 1/2 w^2 x^2.
struct TridiagonalOperator {
  Eigen::VectorXd diagonal;       // n_points entries
  Eigen::VectorXd off_diagonal;   // n_points - 1 entries
  Grid grid;
};

/// The three Lagrange multipliers of the two stationarity ODEs.
struct Multipliers {
  double lambda1 = -1.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
};

struct EigenSolution {
  Eigen::VectorXd eigenvalues;                 // ascending
  std::vector<SampledFunction> eigenfunctions; // unit L2 norm, real-valued
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TridiagonalOperator hamiltonian(const Grid& grid, double omega, double curvature);

/// Lowest k eigenpairs via Sturm-sequence bisection plus inverse iteration.
/// Eigenfunctions are normalized with the trapezoidal rule and sign-fixed so the
/// first component above 1e-12 of the max magnitude is positive.
EigenSolution solve_spectrum(const TridiagonalOperator& op, int k);

/// Normalized Hermite-Gaussian h_n on the grid, via the stable three-term
/// recurrence on normalized Hermite functions. Throws if the grid is too
/// narrow for the requested mode (boundary magnitude above 1e-8).
SampledFunction hermite_state(int n, double omega, const Grid& grid);

/// (lambda1, lambda2, lambda3) = (-1, (n+1/2) omega, -(n+1/2) omega).
Multipliers multipliers_for(int n, double omega);

/// Apply the tridiagonal operator to a vector of samples.
Eigen::VectorXcd apply_operator(const TridiagonalOperator& op, const Eigen::VectorXcd& v);

}  // namespace oscstab
