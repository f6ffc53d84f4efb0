#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace oscstab {

using Complex = std::complex<double>;

/// Uniform grid on [x_min, x_max], symmetric about 0 for oscillator work.
struct Grid {
  double x_min = 0.0;
  double x_max = 0.0;
  int n_points = 0;
  double spacing = 0.0;

  double point(int j) const { return x_min + j * spacing; }
  Eigen::VectorXd points() const;
  /// Trapezoidal quadrature weights (spacing in the interior, spacing/2 at the ends).
  Eigen::VectorXd weights() const;

  bool operator==(const Grid& other) const {
    return x_min == other.x_min && x_max == other.x_max && n_points == other.n_points;
  }
};

/// Complex samples of psi, F or a perturbation on a uniform grid.
struct SampledFunction {
  Eigen::VectorXcd values;
  Grid grid;
};

/// Symmetric grid on [-x_max, x_max]. Throws on non-finite x_max <= 0 or n_points < 16.
Grid make_grid(double x_max, int n_points);

SampledFunction zero_function(const Grid& grid);

/// Trapezoidal quadrature of the samples.
Complex integrate(const SampledFunction& f);

/// Real quadrature of |f|^2.
double squared_norm(const SampledFunction& f);
double l2_norm(const SampledFunction& f);

/// sqrt(integral |a-b|^2); grids must match.
double l2_distance(const SampledFunction& a, const SampledFunction& b);

/// Central differences in the interior, second-order one-sided at both ends.
SampledFunction differentiate(const SampledFunction& f);

/// Dense kernel matrix of the omega-scaled transform between two grids:
///   out_j = sqrt(omega/2pi) * sum_k w_k in_k exp(kernel_sign * i * omega * x_j * y_k).
/// kernel_sign = -1 is the forward (L -> q) direction.
Eigen::MatrixXcd transform_matrix(const Grid& from, const Grid& to, double omega,
                                  int kernel_sign);

/// psi(q) = sqrt(omega/2pi) * integral F(L) exp(-i omega q L) dL.
SampledFunction transform_forward(const SampledFunction& f, const Grid& q_grid,
                                  double omega);

/// Adjoint kernel exp(+i omega q L), same prefactor; inverts transform_forward
/// up to quadrature error on decayed functions.
SampledFunction transform_inverse(const SampledFunction& psi, const Grid& l_grid,
                                  double omega);

/// Max |f| over the outermost 5% of points on each side.
double boundary_magnitude(const SampledFunction& f);

void require_finite(const SampledFunction& f, const char* what);

}  // namespace oscstab
