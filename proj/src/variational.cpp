#include "oscstab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace oscstab {

namespace {

double dual_weight_norm(const Eigen::VectorXcd& g, const Eigen::VectorXd& w) {
  double acc = 0.0;
  for (int j = 0; j < g.size(); ++j) acc += std::norm(g[j]) / w[j];
  return std::sqrt(acc);
}

// Discretized problem data shared by the objective, constraints and their
// adjoint gradients. Kinetic terms go through the dense scaled-transform
// matrices so the discrete functionals match evaluate_eec exactly.
struct Problem {
  Grid qg, lg;
  double omega = 1.0;
  bool paired = false;
  Eigen::VectorXd wq, wl;    // trapezoid weights
  Eigen::VectorXd vq, vl;    // 1/2 omega^2 x^2 factors
  Eigen::MatrixXcd to_l;     // inverse transform: q-grid -> L-grid
  Eigen::MatrixXcd to_q;     // forward transform: L-grid -> q-grid

  int nq() const { return qg.n_points; }
  int nl() const { return lg.n_points; }

  Problem(const Grid& q, const Grid& l, double om, bool pair)
      : qg(q), lg(l), omega(om), paired(pair) {
    wq = qg.weights();
    wl = lg.weights();
    vq.resize(nq());
    vl.resize(nl());
    for (int j = 0; j < nq(); ++j) {
      const double x = qg.point(j);
      vq[j] = 0.5 * omega * omega * x * x;
    }
    for (int k = 0; k < nl(); ++k) {
      const double x = lg.point(k);
      vl[k] = 0.5 * omega * omega * x * x;
    }
    to_l = transform_matrix(qg, lg, omega, +1);
    to_q = transform_matrix(lg, qg, omega, -1);
  }

  // Stacked unknown: psi followed by F (free mode), psi alone (paired mode).
  Eigen::VectorXcd psi_of(const Eigen::VectorXcd& u) const { return u.head(nq()); }
  Eigen::VectorXcd f_of(const Eigen::VectorXcd& u) const {
    return paired ? Eigen::VectorXcd(to_l * u.head(nq())) : Eigen::VectorXcd(u.tail(nl()));
  }

  // Objective J = kinetic(psi) + kinetic(F). On the feasible manifold J
  // equals the oscillator energy, so its KKT points are exactly the discrete
  // stationarity-ODE solutions; the literal functional I cannot serve as the
  // objective because it is itself the first constraint (every feasible point
  // would be stationary, losing quantization).
  struct Eval {
    double objective = 0.0;
    std::array<double, 4> c{};  // balance_q, balance_l, norm_f - 1, norm_psi - 1
    Eigen::VectorXcd grad_objective;
    std::array<Eigen::VectorXcd, 4> grad_c;
  };

  double weighted_quad(const Eigen::VectorXcd& v, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& factor) const {
    double acc = 0.0;
    for (int j = 0; j < v.size(); ++j) acc += w[j] * factor[j] * std::norm(v[j]);
    return acc;
  }

  Eval evaluate(const Eigen::VectorXcd& u, bool need_grad) const {
    Eval e;
    const Eigen::VectorXcd psi = psi_of(u);
    const Eigen::VectorXcd f = f_of(u);
    const Eigen::VectorXcd psi_l = to_l * psi;          // inverse transform of psi
    const Eigen::VectorXcd f_q = to_q * f;              // forward transform of F

    const double kin_psi = weighted_quad(psi_l, wl, vl);
    const double pot_f = weighted_quad(f, wl, vl);
    const double kin_f = weighted_quad(f_q, wq, vq);
    const double pot_psi = weighted_quad(psi, wq, vq);
    double norm_psi = 0.0, norm_f = 0.0;
    for (int j = 0; j < nq(); ++j) norm_psi += wq[j] * std::norm(psi[j]);
    for (int k = 0; k < nl(); ++k) norm_f += wl[k] * std::norm(f[k]);

    e.objective = kin_psi + kin_f;
    e.c = {kin_psi - pot_f, kin_f - pot_psi, norm_f - 1.0, norm_psi - 1.0};
    if (!need_grad) return e;

    // Wirtinger gradients (d/d conj), per unknown block.
    const Eigen::VectorXcd g_kin_psi =
        to_l.adjoint() * (wl.array() * vl.array() * psi_l.array()).matrix();
    const Eigen::VectorXcd g_pot_psi =
        (wq.array() * vq.array() * psi.array()).matrix();
    const Eigen::VectorXcd g_norm_psi = (wq.array() * psi.array()).matrix();
    const Eigen::VectorXcd g_pot_f = (wl.array() * vl.array() * f.array()).matrix();
    const Eigen::VectorXcd g_kin_f =
        to_q.adjoint() * (wq.array() * vq.array() * f_q.array()).matrix();
    const Eigen::VectorXcd g_norm_f = (wl.array() * f.array()).matrix();

    auto stack = [&](const Eigen::VectorXcd& gpsi,
                     const Eigen::VectorXcd& gf) -> Eigen::VectorXcd {
      if (paired) return gpsi + to_l.adjoint() * gf;
      Eigen::VectorXcd g(nq() + nl());
      g.head(nq()) = gpsi;
      g.tail(nl()) = gf;
      return g;
    };
    e.grad_objective = stack(g_kin_psi, g_kin_f);
    e.grad_c[0] = stack(g_kin_psi, -g_pot_f);
    e.grad_c[1] = stack(-g_pot_psi, g_kin_f);
    e.grad_c[2] = stack(Eigen::VectorXcd::Zero(nq()), g_norm_f);
    e.grad_c[3] = stack(g_norm_psi, Eigen::VectorXcd::Zero(nl()));
    return e;
  }

  double dual_norm(const Eigen::VectorXcd& g) const {
    if (paired) return dual_weight_norm(g, wq);
    double a = dual_weight_norm(g.head(nq()), wq);
    double b = dual_weight_norm(g.tail(nl()), wl);
    return std::sqrt(a * a + b * b);
  }
};

// Least-squares multiplier estimate: argmin over nu of
// || grad J + sum_i nu_i grad c_i ||^2 (minimum-norm in the degenerate
// directions thanks to the ridge).
Eigen::Vector4d estimate_multipliers(const Problem::Eval& e) {
  Eigen::Matrix4d gram;
  Eigen::Vector4d rhs;
  for (int i = 0; i < 4; ++i) {
    rhs[i] = -e.grad_c[i].dot(e.grad_objective).real();
    for (int j = 0; j < 4; ++j) gram(i, j) = e.grad_c[i].dot(e.grad_c[j]).real();
  }
  gram += 1e-10 * (1.0 + gram.trace()) * Eigen::Matrix4d::Identity();
  return gram.ldlt().solve(rhs);
}

// The augmented-Lagrangian multipliers (nu0..nu3 on balance_q, balance_l,
// norm_f, norm_psi) determine the three reported ODE multipliers up to the
// gauge nu1 = -(1 + nu0): dividing the psi equation by (1 + nu0) and the F
// equation by -nu0 puts both in the standard (-1, E, -E) normalization.
Multipliers multipliers_from_penalties(const Eigen::Vector4d& nu) {
  const double d_psi = 1.0 + nu[0];
  Multipliers m;
  m.lambda1 = std::abs(d_psi) > 1e-9 ? nu[1] / d_psi : -1.0;
  m.lambda2 = std::abs(nu[0]) > 1e-9 ? nu[2] / nu[0] : 0.0;
  m.lambda3 = std::abs(d_psi) > 1e-9 ? nu[3] / d_psi : 0.0;
  return m;
}

}  // namespace

std::pair<double, double> stationarity_residual(const EecState& state,
                                                const Multipliers& m) {
  const double omega = state.config.omega;
  auto ode_norm = [&](const SampledFunction& f, double kin_coeff, double pot_coeff,
                      double shift) {
    const int n = f.grid.n_points;
    const double h = f.grid.spacing;
    double acc = 0.0;
    for (int j = 1; j + 1 < n; ++j) {
      const Complex d2 =
          (f.values[j - 1] - 2.0 * f.values[j] + f.values[j + 1]) / (h * h);
      const double x = f.grid.point(j);
      const Complex r = kin_coeff * d2 + pot_coeff * 0.5 * omega * omega * x * x * f.values[j] +
                        shift * f.values[j];
      acc += h * std::norm(r);
    }
    return std::sqrt(acc);
  };
  // -1/2 psi'' + (-lambda1) 1/2 w^2 q^2 psi + lambda3 psi
  const double r1 = ode_norm(state.psi, -0.5, -m.lambda1, m.lambda3);
  // -lambda1/2 F'' - 1/2 w^2 L^2 F + lambda2 F
  const double r2 = ode_norm(state.f, -0.5 * m.lambda1, -1.0, m.lambda2);
  return {r1, r2};
}

VariationalResult solve(const EecState& init, const SolveOptions& options) {
  if (options.max_iterations < 1 || options.gradient_tolerance <= 0.0 ||
      options.constraint_tolerance <= 0.0 || options.penalty_growth <= 1.0)
    throw std::invalid_argument("solve: invalid options");
  require_finite(init.psi, "solve init psi");
  require_finite(init.f, "solve init f");

  Problem prob(init.psi.grid, init.f.grid, init.config.omega, options.paired_mode);

  const double norm_psi = l2_norm(init.psi);
  const double norm_f = l2_norm(init.f);
  if (norm_psi < 0.1 || (!options.paired_mode && norm_f < 0.1))
    throw std::invalid_argument("solve: degenerate (near-zero) init");

  Eigen::VectorXcd u;
  if (options.paired_mode) {
    u = init.psi.values / norm_psi;
  } else {
    u.resize(prob.nq() + prob.nl());
    u.head(prob.nq()) = init.psi.values / norm_psi;
    u.tail(prob.nl()) = init.f.values / norm_f;
  }

  double mu = 10.0;
  Problem::Eval ev = prob.evaluate(u, true);
  Eigen::Vector4d nu = estimate_multipliers(ev);

  VariationalResult result;
  int steps = 0;
  double descent_violation = 0.0;
  double prev_infeas = std::numeric_limits<double>::infinity();
  bool converged = false;

  auto al_value = [&](const Problem::Eval& e) {
    double v = e.objective;
    for (int i = 0; i < 4; ++i) v += nu[i] * e.c[i] + 0.5 * mu * e.c[i] * e.c[i];
    return v;
  };
  auto al_grad = [&](const Problem::Eval& e) {
    Eigen::VectorXcd g = e.grad_objective;
    for (int i = 0; i < 4; ++i) g += (nu[i] + mu * e.c[i]) * e.grad_c[i];
    return g;
  };
  auto infeasibility = [](const Problem::Eval& e) {
    return std::max({std::abs(e.c[0]), std::abs(e.c[1]), std::abs(e.c[2]),
                     std::abs(e.c[3])});
  };

  auto check_converged = [&](const Problem::Eval& e) {
    if (infeasibility(e) > options.constraint_tolerance) return false;
    Eigen::VectorXcd g = e.grad_objective;
    for (int i = 0; i < 4; ++i) g += nu[i] * e.grad_c[i];
    return prob.dual_norm(g) <= options.gradient_tolerance;
  };

  const int max_outer = 200;
  for (int outer = 0; outer < max_outer; ++outer) {
    result.objective_trace.push_back(ev.objective);
    if (check_converged(ev)) {
      converged = true;
      break;
    }
    if (steps >= options.max_iterations) break;

    // Inner descent on the augmented value at fixed (nu, mu).
    const double inner_tol =
        std::max(0.3 * options.gradient_tolerance, std::min(1e-2, 1.0 / mu));
    double value = al_value(ev);
    if (!std::isfinite(value)) throw std::runtime_error("solve: non-finite objective");
    Eigen::VectorXcd g = al_grad(ev);
    double t = 1.0 / (1.0 + mu);
    Eigen::VectorXcd prev_u, prev_g;
    bool have_prev = false;
    while (steps < options.max_iterations && prob.dual_norm(g) > inner_tol) {
      if (have_prev) {
        const Eigen::VectorXcd s = u - prev_u;
        const Eigen::VectorXcd y = g - prev_g;
        const double sy = s.dot(y).real();
        const double ss = s.squaredNorm();
        if (sy > 0.0 && std::isfinite(sy)) t = std::clamp(ss / sy, 1e-14, 1e8);
      }
      const double g2 = g.squaredNorm();
      double trial = t;
      bool accepted = false;
      Eigen::VectorXcd u_next;
      Problem::Eval ev_next;
      double value_next = 0.0;
      for (int bt = 0; bt < 60; ++bt) {
        u_next = u - trial * g;
        ev_next = prob.evaluate(u_next, false);
        value_next = al_value(ev_next);
        if (std::isfinite(value_next) && value_next <= value - 1e-4 * trial * 2.0 * g2) {
          accepted = true;
          break;
        }
        trial *= 0.5;
      }
      if (!accepted) break;  // stalled at line-search resolution
      descent_violation = std::max(descent_violation, value_next - value);
      prev_u = u;
      prev_g = g;
      have_prev = true;
      u = u_next;
      ev = prob.evaluate(u, true);
      value = al_value(ev);
      g = al_grad(ev);
      ++steps;
      t = trial;
    }

    // Multiplier update, then penalty growth when infeasibility stagnates.
    ev = prob.evaluate(u, true);
    for (int i = 0; i < 4; ++i) nu[i] += mu * ev.c[i];
    const double infeas = infeasibility(ev);
    if (infeas > 0.25 * prev_infeas && mu < 1e8) mu *= options.penalty_growth;
    prev_infeas = infeas;
  }

  EecState final_state;
  final_state.config = init.config;
  final_state.psi = {prob.psi_of(u), prob.qg};
  final_state.f = {prob.f_of(u), prob.lg};

  result.state = final_state;
  result.multipliers = multipliers_from_penalties(nu);
  if (options.paired_mode) {
    // With F eliminated the two balances hold identically (Parseval), so the
    // balance multipliers carry no information; report the multipliers the
    // converged energy implies.
    const double energy = expected_energy(final_state.psi, final_state.config);
    result.multipliers = {-1.0, energy, -energy};
  }
  result.objective = ev.c[0];
  result.constraint_residuals = evaluate_eec(final_state);
  const auto [r1, r2] = stationarity_residual(final_state, result.multipliers);
  result.stationarity = {r1, r2};
  result.iterations = steps;
  result.descent_violation = descent_violation;
  // Converged results must also satisfy the stationarity ODEs.
  result.converged = converged && r1 <= 10.0 * options.gradient_tolerance &&
                     r2 <= 10.0 * options.gradient_tolerance;
  return result;
}

std::vector<QuantizationEntry> quantization_report(
    const std::vector<VariationalResult>& results) {
  std::vector<QuantizationEntry> report;
  report.reserve(results.size());
  for (const auto& r : results) {
    if (!r.converged)
      throw std::invalid_argument("quantization_report: unconverged result");
    const double omega = r.state.config.omega;
    const double energy = expected_energy(r.state.psi, r.state.config);
    const int level = std::max(0, static_cast<int>(std::lround(energy / omega - 0.5)));
    report.push_back({energy, level, std::abs(energy - (level + 0.5) * omega)});
  }
  return report;
}

EecState random_init(const Grid& grid, double omega, int basis_size,
                     std::uint64_t seed) {
  if (basis_size < 1) throw std::invalid_argument("random_init: basis_size must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<SampledFunction> basis;
  basis.reserve(basis_size);
  for (int m = 0; m < basis_size; ++m) basis.push_back(hermite_state(m, omega, grid));

  auto draw = [&]() {
    SampledFunction f = zero_function(grid);
    for (int m = 0; m < basis_size; ++m) {
      const Complex coeff(normal(rng), normal(rng));
      f.values += coeff * basis[m].values;
    }
    const double norm = l2_norm(f);
    if (norm < 1e-12) throw std::runtime_error("random_init: degenerate draw");
    f.values /= norm;
    return f;
  };

  EecState state;
  state.config = {omega};
  state.psi = draw();
  state.f = draw();
  return state;
}

}  // namespace oscstab
