#include "oscstab/grid.hpp"

#include <cmath>
#include <numbers>

namespace oscstab {

Eigen::VectorXd Grid::points() const {
  Eigen::VectorXd p(n_points);
  for (int j = 0; j < n_points; ++j) p[j] = point(j);
  return p;
}

Eigen::VectorXd Grid::weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_points, spacing);
  w[0] = 0.5 * spacing;
  w[n_points - 1] = 0.5 * spacing;
  return w;
}

Grid make_grid(double x_max, int n_points) {
  if (!std::isfinite(x_max) || x_max <= 0.0)
    throw std::invalid_argument("make_grid: x_max must be finite and positive");
  if (n_points < 16) throw std::invalid_argument("make_grid: n_points must be >= 16");
  Grid g;
  g.x_min = -x_max;
  g.x_max = x_max;
  g.n_points = n_points;
  g.spacing = 2.0 * x_max / (n_points - 1);
  return g;
}

SampledFunction zero_function(const Grid& grid) {
  return {Eigen::VectorXcd::Zero(grid.n_points), grid};
}

void require_finite(const SampledFunction& f, const char* what) {
  if (f.values.size() != f.grid.n_points)
    throw std::invalid_argument(std::string(what) + ": sample count does not match grid");
  if (!f.values.allFinite())
    throw std::invalid_argument(std::string(what) + ": non-finite sample values");
}

Complex integrate(const SampledFunction& f) {
  const Eigen::VectorXd w = f.grid.weights();
  Complex acc(0.0, 0.0);
  for (int j = 0; j < f.grid.n_points; ++j) acc += w[j] * f.values[j];
  return acc;
}

double squared_norm(const SampledFunction& f) {
  const Eigen::VectorXd w = f.grid.weights();
  double acc = 0.0;
  for (int j = 0; j < f.grid.n_points; ++j) acc += w[j] * std::norm(f.values[j]);
  return acc;
}

double l2_norm(const SampledFunction& f) { return std::sqrt(squared_norm(f)); }

double l2_distance(const SampledFunction& a, const SampledFunction& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("l2_distance: grid mismatch");
  const Eigen::VectorXd w = a.grid.weights();
  double acc = 0.0;
  for (int j = 0; j < a.grid.n_points; ++j) acc += w[j] * std::norm(a.values[j] - b.values[j]);
  return std::sqrt(acc);
}

SampledFunction differentiate(const SampledFunction& f) {
  const int n = f.grid.n_points;
  if (n < 3) throw std::invalid_argument("differentiate: grid too small");
  const double h = f.grid.spacing;
  Eigen::VectorXcd d(n);
  d[0] = (-3.0 * f.values[0] + 4.0 * f.values[1] - f.values[2]) / (2.0 * h);
  for (int j = 1; j < n - 1; ++j) d[j] = (f.values[j + 1] - f.values[j - 1]) / (2.0 * h);
  d[n - 1] = (3.0 * f.values[n - 1] - 4.0 * f.values[n - 2] + f.values[n - 3]) / (2.0 * h);
  return {std::move(d), f.grid};
}

Eigen::MatrixXcd transform_matrix(const Grid& from, const Grid& to, double omega,
                                  int kernel_sign) {
  if (omega <= 0.0 || !std::isfinite(omega))
    throw std::invalid_argument("transform_matrix: omega must be positive");
  const double prefactor = std::sqrt(omega / (2.0 * std::numbers::pi));
  const Eigen::VectorXd w = from.weights();
  Eigen::MatrixXcd kernel(to.n_points, from.n_points);
  for (int j = 0; j < to.n_points; ++j) {
    const double xj = to.point(j);
    for (int k = 0; k < from.n_points; ++k) {
      const double phase = kernel_sign * omega * xj * from.point(k);
      kernel(j, k) = prefactor * w[k] * Complex(std::cos(phase), std::sin(phase));
    }
  }
  return kernel;
}

SampledFunction transform_forward(const SampledFunction& f, const Grid& q_grid,
                                  double omega) {
  require_finite(f, "transform_forward");
  const Eigen::MatrixXcd kernel = transform_matrix(f.grid, q_grid, omega, -1);
  return {kernel * f.values, q_grid};
}

SampledFunction transform_inverse(const SampledFunction& psi, const Grid& l_grid,
                                  double omega) {
  require_finite(psi, "transform_inverse");
  const Eigen::MatrixXcd kernel = transform_matrix(psi.grid, l_grid, omega, +1);
  return {kernel * psi.values, l_grid};
}

double boundary_magnitude(const SampledFunction& f) {
  const int n = f.grid.n_points;
  const int band = std::max(1, static_cast<int>(std::lround(0.05 * n)));
  double m = 0.0;
  for (int j = 0; j < band; ++j) {
    m = std::max(m, std::abs(f.values[j]));
    m = std::max(m, std::abs(f.values[n - 1 - j]));
  }
  return m;
}

}  // namespace oscstab
