#include "oscstab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oscstab {

namespace {

// Number of eigenvalues of the tridiagonal (d, e) strictly below x,
// by the standard Sturm sequence in quotient form.
int sturm_count(const Eigen::VectorXd& d, const Eigen::VectorXd& e, double x) {
  const int n = static_cast<int>(d.size());
  int count = 0;
  double q = d[0] - x;
  if (q < 0.0) ++count;
  for (int i = 1; i < n; ++i) {
    if (q == 0.0) q = 1e-300;
    q = d[i] - x - e[i - 1] * e[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

// k-th (0-based) eigenvalue by bisection on the Sturm count.
double bisect_eigenvalue(const Eigen::VectorXd& d, const Eigen::VectorXd& e, int k,
                         double lo, double hi) {
  for (int iter = 0; iter < 128 && hi - lo > 1e-14 * (std::abs(lo) + std::abs(hi) + 1.0);
       ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(d, e, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Solve (T - sigma I) x = b by Gaussian elimination with partial pivoting
// (bandwidth grows to 2 above the diagonal).
Eigen::VectorXd solve_shifted(const Eigen::VectorXd& d, const Eigen::VectorXd& e,
                              double sigma, Eigen::VectorXd b) {
  const int n = static_cast<int>(d.size());
  Eigen::VectorXd a0(n), a1(n), a2(n);
  for (int i = 0; i < n; ++i) {
    a0[i] = d[i] - sigma;
    a1[i] = (i + 1 < n) ? e[i] : 0.0;
    a2[i] = 0.0;
  }
  Eigen::VectorXd sub = Eigen::VectorXd::Zero(n);
  for (int i = 0; i + 1 < n; ++i) sub[i] = e[i];

  for (int i = 0; i + 1 < n; ++i) {
    double pivot = a0[i];
    double below = sub[i];
    if (std::abs(below) > std::abs(pivot)) {
      std::swap(a0[i], sub[i]);
      std::swap(a1[i], a0[i + 1]);
      std::swap(a2[i], a1[i + 1]);
      std::swap(b[i], b[i + 1]);
      pivot = a0[i];
    }
    if (pivot == 0.0) pivot = a0[i] = 1e-300;
    const double m = sub[i] / pivot;
    a0[i + 1] -= m * a1[i];
    a1[i + 1] -= m * a2[i];
    b[i + 1] -= m * b[i];
  }
  Eigen::VectorXd x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    if (i + 1 < n) s -= a1[i] * x[i + 1];
    if (i + 2 < n) s -= a2[i] * x[i + 2];
    double pivot = a0[i];
    if (pivot == 0.0) pivot = 1e-300;
    x[i] = s / pivot;
  }
  return x;
}

Eigen::VectorXd apply_real(const Eigen::VectorXd& d, const Eigen::VectorXd& e,
                           const Eigen::VectorXd& v) {
  const int n = static_cast<int>(d.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    double s = d[i] * v[i];
    if (i > 0) s += e[i - 1] * v[i - 1];
    if (i + 1 < n) s += e[i] * v[i + 1];
    out[i] = s;
  }
  return out;
}

}  // namespace

TridiagonalOperator hamiltonian(const Grid& grid, double omega, double curvature) {
  if (omega <= 0.0) throw std::invalid_argument("hamiltonian: omega must be positive");
  if (curvature <= 0.0)
    throw std::invalid_argument("hamiltonian: curvature must be positive (bound problem)");
  const double h2 = grid.spacing * grid.spacing;
  TridiagonalOperator op;
  op.grid = grid;
  op.diagonal.resize(grid.n_points);
  op.off_diagonal = Eigen::VectorXd::Constant(grid.n_points - 1, -0.5 / h2);
  for (int j = 0; j < grid.n_points; ++j) {
    const double q = grid.point(j);
    op.diagonal[j] = 1.0 / h2 + curvature * 0.5 * omega * omega * q * q;
  }
  return op;
}

Eigen::VectorXcd apply_operator(const TridiagonalOperator& op, const Eigen::VectorXcd& v) {
  const int n = op.grid.n_points;
  Eigen::VectorXcd out(n);
  for (int i = 0; i < n; ++i) {
    Complex s = op.diagonal[i] * v[i];
    if (i > 0) s += op.off_diagonal[i - 1] * v[i - 1];
    if (i + 1 < n) s += op.off_diagonal[i] * v[i + 1];
    out[i] = s;
  }
  return out;
}

EigenSolution solve_spectrum(const TridiagonalOperator& op, int k) {
  const int n = op.grid.n_points;
  if (k < 1 || k > n / 4)
    throw std::invalid_argument("solve_spectrum: k must be in [1, n_points/4]");
  const Eigen::VectorXd& d = op.diagonal;
  const Eigen::VectorXd& e = op.off_diagonal;

  // Gershgorin bounds.
  double lo = d[0], hi = d[0];
  for (int i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(e[i - 1]);
    if (i + 1 < n) r += std::abs(e[i]);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }

  EigenSolution sol;
  sol.eigenvalues.resize(k);
  sol.eigenfunctions.reserve(k);
  const double op_scale = std::max(std::abs(lo), std::abs(hi));

  for (int m = 0; m < k; ++m) {
    const double lambda = bisect_eigenvalue(d, e, m, lo, hi);
    sol.eigenvalues[m] = lambda;

    // Inverse iteration from a deterministic pseudo-random start.
    Eigen::VectorXd v(n);
    std::uint64_t s = 0x9e3779b97f4a7c15ULL + 0x1000ULL * (m + 1);
    for (int i = 0; i < n; ++i) {
      s ^= s << 13;
      s ^= s >> 7;
      s ^= s << 17;
      v[i] = static_cast<double>(s >> 11) / 9007199254740992.0 - 0.5;
    }
    v.normalize();
    bool ok = false;
    for (int iter = 0; iter < 30; ++iter) {
      v = solve_shifted(d, e, lambda, v);
      const double norm = v.norm();
      if (!(norm > 0.0) || !v.allFinite())
        throw ConvergenceError("solve_spectrum: inverse iteration broke down");
      v /= norm;
      const double resid = (apply_real(d, e, v) - lambda * v).norm();
      if (resid <= 1e-10 * op_scale) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConvergenceError("solve_spectrum: inverse iteration did not converge");

    // Normalize against the quadrature rule and fix the sign.
    SampledFunction f{v.cast<Complex>(), op.grid};
    const double norm = l2_norm(f);
    f.values /= norm;
    const double vmax = f.values.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      const double re = f.values[i].real();
      if (std::abs(re) > 1e-12 * vmax) {
        if (re < 0.0) f.values = -f.values;
        break;
      }
    }
    sol.eigenfunctions.push_back(std::move(f));
  }

  for (int m = 0; m + 1 < k; ++m)
    if (!(sol.eigenvalues[m] < sol.eigenvalues[m + 1]))
      throw ConvergenceError("solve_spectrum: eigenvalues not strictly increasing");
  return sol;
}

SampledFunction hermite_state(int n, double omega, const Grid& grid) {
  if (n < 0 || n > 20) throw std::invalid_argument("hermite_state: n must be in [0, 20]");
  if (omega <= 0.0) throw std::invalid_argument("hermite_state: omega must be positive");
  const int np = grid.n_points;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd cur(np);
  const double c0 = std::pow(omega / std::numbers::pi, 0.25);
  for (int j = 0; j < np; ++j) {
    const double q = grid.point(j);
    cur[j] = c0 * std::exp(-0.5 * omega * q * q);
  }
  for (int m = 1; m <= n; ++m) {
    Eigen::VectorXd next(np);
    const double a = std::sqrt(2.0 / m);
    const double b = std::sqrt(static_cast<double>(m - 1) / m);
    for (int j = 0; j < np; ++j) {
      const double x = std::sqrt(omega) * grid.point(j);
      next[j] = a * x * cur[j] - b * prev[j];
    }
    prev = std::move(cur);
    cur = std::move(next);
  }
  SampledFunction f{cur.cast<Complex>(), grid};
  if (std::max(std::abs(cur[0]), std::abs(cur[np - 1])) > 1e-8)
    throw std::invalid_argument("hermite_state: grid too narrow for requested mode");
  return f;
}

Multipliers multipliers_for(int n, double omega) {
  if (n < 0) throw std::invalid_argument("multipliers_for: n must be nonnegative");
  if (omega <= 0.0) throw std::invalid_argument("multipliers_for: omega must be positive");
  const double level = (n + 0.5) * omega;
  return {-1.0, level, -level};
}

}  // namespace oscstab
