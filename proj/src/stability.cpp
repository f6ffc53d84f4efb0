#include "oscstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oscstab {

namespace {

double dual_weight_norm(const Eigen::VectorXcd& g, const Eigen::VectorXd& w) {
  double acc = 0.0;
  for (int j = 0; j < g.size(); ++j) acc += std::norm(g[j]) / w[j];
  return std::sqrt(acc);
}

// Stacked least-squares objective over the perturbed equality residuals,
// with the transforms of all ensemble members precomputed.
struct OverdeterminedProblem {
  Grid qg, lg;
  double omega;
  bool paired;
  Eigen::VectorXd wq, wl, vq, vl;
  Eigen::MatrixXcd to_l, to_q;
  std::vector<Eigen::VectorXcd> dpsi, df;      // member perturbations
  std::vector<Eigen::VectorXcd> dpsi_l, df_q;  // their transforms

  OverdeterminedProblem(const EecState& init, const PerturbationEnsemble& ens,
                        bool paired_mode)
      : qg(init.psi.grid), lg(init.f.grid), omega(init.config.omega),
        paired(paired_mode) {
    wq = qg.weights();
    wl = lg.weights();
    vq.resize(qg.n_points);
    vl.resize(lg.n_points);
    for (int j = 0; j < qg.n_points; ++j) {
      const double x = qg.point(j);
      vq[j] = 0.5 * omega * omega * x * x;
    }
    for (int k = 0; k < lg.n_points; ++k) {
      const double x = lg.point(k);
      vl[k] = 0.5 * omega * omega * x * x;
    }
    to_l = transform_matrix(qg, lg, omega, +1);
    to_q = transform_matrix(lg, qg, omega, -1);
    for (std::size_t i = 0; i < ens.deltas_psi.size(); ++i) {
      dpsi.push_back(ens.deltas_psi[i].values);
      df.push_back(ens.deltas_f[i].values);
      dpsi_l.push_back(to_l * dpsi.back());
      df_q.push_back(to_q * df.back());
    }
  }

  int nq() const { return qg.n_points; }
  int nl() const { return lg.n_points; }
  int members() const { return static_cast<int>(dpsi.size()); }

  Eigen::VectorXcd psi_of(const Eigen::VectorXcd& u) const { return u.head(nq()); }
  Eigen::VectorXcd f_of(const Eigen::VectorXcd& u) const {
    return paired ? Eigen::VectorXcd(to_l * u.head(nq()))
                  : Eigen::VectorXcd(u.tail(nl()));
  }

  double quad(const Eigen::VectorXcd& v, const Eigen::VectorXd& w,
              const Eigen::VectorXd& factor) const {
    double acc = 0.0;
    for (int j = 0; j < v.size(); ++j) acc += w[j] * factor[j] * std::norm(v[j]);
    return acc;
  }
  double norm2(const Eigen::VectorXcd& v, const Eigen::VectorXd& w) const {
    double acc = 0.0;
    for (int j = 0; j < v.size(); ++j) acc += w[j] * std::norm(v[j]);
    return acc;
  }

  struct Eval {
    double value = 0.0;
    Eigen::VectorXcd grad;
  };

  Eval evaluate(const Eigen::VectorXcd& u, bool need_grad) const {
    const Eigen::VectorXcd psi = psi_of(u);
    const Eigen::VectorXcd f = f_of(u);
    const Eigen::VectorXcd psi_l = to_l * psi;
    const Eigen::VectorXcd f_q = to_q * f;

    Eval e;
    Eigen::VectorXcd acc_psi_l, acc_psi_pot, acc_psi_norm;
    Eigen::VectorXcd acc_f_q, acc_f_pot, acc_f_norm;
    if (need_grad) {
      acc_psi_l = Eigen::VectorXcd::Zero(nl());
      acc_psi_pot = Eigen::VectorXcd::Zero(nq());
      acc_psi_norm = Eigen::VectorXcd::Zero(nq());
      acc_f_q = Eigen::VectorXcd::Zero(nq());
      acc_f_pot = Eigen::VectorXcd::Zero(nl());
      acc_f_norm = Eigen::VectorXcd::Zero(nl());
    }
    for (int i = 0; i < members(); ++i) {
      const Eigen::VectorXcd pl = psi_l + dpsi_l[i];
      const Eigen::VectorXcd pq = psi + dpsi[i];
      const Eigen::VectorXcd fl = f + df[i];
      const Eigen::VectorXcd fq = f_q + df_q[i];
      const double c1 = quad(pl, wl, vl) - quad(fl, wl, vl);
      const double c2 = quad(fq, wq, vq) - quad(pq, wq, vq);
      const double c3 = norm2(fl, wl) - 1.0;
      const double c4 = norm2(pq, wq) - 1.0;
      e.value += c1 * c1 + c2 * c2 + c3 * c3 + c4 * c4;
      if (need_grad) {
        acc_psi_l += 2.0 * c1 * pl;
        acc_psi_pot -= 2.0 * c2 * pq;
        acc_psi_norm += 2.0 * c4 * pq;
        acc_f_pot -= 2.0 * c1 * fl;
        acc_f_q += 2.0 * c2 * fq;
        acc_f_norm += 2.0 * c3 * fl;
      }
    }
    if (!need_grad) return e;

    Eigen::VectorXcd gpsi =
        to_l.adjoint() * (wl.array() * vl.array() * acc_psi_l.array()).matrix() +
        (wq.array() * vq.array() * acc_psi_pot.array()).matrix() +
        (wq.array() * acc_psi_norm.array()).matrix();
    Eigen::VectorXcd gf =
        (wl.array() * vl.array() * acc_f_pot.array()).matrix() +
        to_q.adjoint() * (wq.array() * vq.array() * acc_f_q.array()).matrix() +
        (wl.array() * acc_f_norm.array()).matrix();
    if (paired) {
      e.grad = gpsi + to_l.adjoint() * gf;
    } else {
      e.grad.resize(nq() + nl());
      e.grad.head(nq()) = gpsi;
      e.grad.tail(nl()) = gf;
    }
    return e;
  }

  double dual_norm(const Eigen::VectorXcd& g) const {
    if (paired) return dual_weight_norm(g, wq);
    const double a = dual_weight_norm(g.head(nq()), wq);
    const double b = dual_weight_norm(g.tail(nl()), wl);
    return std::sqrt(a * a + b * b);
  }

  // Weighted L2 norm of a displacement in the unknown, for step-size capping.
  double primal_norm(const Eigen::VectorXcd& v) const {
    if (paired) return std::sqrt(norm2(v, wq));
    return std::sqrt(norm2(v.head(nq()), wq) + norm2(v.tail(nl()), wl));
  }
};

void check_ensemble(const EecState& state, const PerturbationEnsemble& ensemble) {
  if (ensemble.deltas_psi.size() != ensemble.deltas_f.size())
    throw std::invalid_argument("ensemble: delta_psi/delta_f size mismatch");
  for (const auto& d : ensemble.deltas_psi)
    if (!(d.grid == state.psi.grid))
      throw std::invalid_argument("ensemble: delta_psi grid mismatch");
  for (const auto& d : ensemble.deltas_f)
    if (!(d.grid == state.f.grid))
      throw std::invalid_argument("ensemble: delta_f grid mismatch");
}

}  // namespace

PerturbationEnsemble generate_ensemble(const PerturbationSpec& spec, const Grid& grid,
                                       double omega) {
  if (spec.count < 10) throw std::invalid_argument("generate_ensemble: count must be >= 10");
  if (spec.count % 2 != 0)
    throw std::invalid_argument("generate_ensemble: count must be even (+/- pairs)");
  if (spec.amplitude <= 0.0)
    throw std::invalid_argument("generate_ensemble: amplitude must be positive");
  if (spec.basis_size < 2)
    throw std::invalid_argument("generate_ensemble: basis_size must be >= 2");

  std::vector<SampledFunction> basis;
  basis.reserve(spec.basis_size);
  for (int m = 0; m < spec.basis_size; ++m) basis.push_back(hermite_state(m, omega, grid));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw_pairs = [&](std::vector<SampledFunction>& out) {
    for (int p = 0; p < spec.count / 2; ++p) {
      SampledFunction d = zero_function(grid);
      double norm = 0.0;
      do {
        d.values.setZero();
        for (int m = 0; m < spec.basis_size; ++m)
          d.values += Complex(normal(rng), 0.0) * basis[m].values;
        norm = l2_norm(d);
      } while (norm < 1e-12);
      d.values *= spec.amplitude / norm;
      out.push_back(d);
      out.push_back({-d.values, grid});
    }
  };

  PerturbationEnsemble ens;
  ens.spec = spec;
  draw_pairs(ens.deltas_psi);
  if (spec.perturb_f) {
    draw_pairs(ens.deltas_f);
  } else {
    for (int i = 0; i < spec.count; ++i) ens.deltas_f.push_back(zero_function(grid));
  }
  return ens;
}

Eigen::VectorXd assemble_residuals(const EecState& state,
                                   const PerturbationEnsemble& ensemble) {
  check_ensemble(state, ensemble);
  const double omega = state.config.omega;
  const int count = static_cast<int>(ensemble.deltas_psi.size());
  Eigen::VectorXd r(4 * count);
  for (int i = 0; i < count; ++i) {
    EecState perturbed = state;
    perturbed.psi.values += ensemble.deltas_psi[i].values;
    perturbed.f.values += ensemble.deltas_f[i].values;
    r[4 * i + 0] = kinetic_energy(perturbed.psi, omega) -
                   potential_energy(perturbed.f, omega);
    r[4 * i + 1] = kinetic_energy(perturbed.f, omega) -
                   potential_energy(perturbed.psi, omega);
    r[4 * i + 2] = squared_norm(perturbed.f) - 1.0;
    r[4 * i + 3] = squared_norm(perturbed.psi) - 1.0;
  }
  return r;
}

EecState optimize_overdetermined(const EecState& init,
                                 const PerturbationEnsemble& ensemble,
                                 const SolveOptions& options) {
  check_ensemble(init, ensemble);
  require_finite(init.psi, "optimize_overdetermined init psi");
  require_finite(init.f, "optimize_overdetermined init f");

  OverdeterminedProblem prob(init, ensemble, options.paired_mode);
  Eigen::VectorXcd u;
  if (options.paired_mode) {
    u = init.psi.values;
  } else {
    u.resize(prob.nq() + prob.nl());
    u.head(prob.nq()) = init.psi.values;
    u.tail(prob.nl()) = init.f.values;
  }

  auto ev = prob.evaluate(u, true);
  double value = ev.value;
  Eigen::VectorXcd g = ev.grad;
  const double g0 = prob.dual_norm(g);
  const double tol = std::max(1e-14, 1e-7 * g0);

  // The discretized system is underdetermined (4*count equations, ~4*n_points
  // real unknowns), so exact zeros of the stacked residuals exist far from
  // every init and the landscape around a near-feasible state is a long
  // valley with O(amplitude^2) slope. The optimum the stability measure wants
  // is the nearby quasi-minimum where the well-conditioned residual
  // directions are resolved. Steps are capped at a fraction of the
  // perturbation scale, and descent windows are classified by relative
  // improvement: steep (productive) windows may travel as far as they need
  // (an infeasible state escaping O(1) residuals), while shallow (crawl)
  // windows draw from a displacement budget proportional to the amplitude,
  // which pins the drift of near-feasible states to O(amplitude).
  const double step_cap = std::max(0.25 * ensemble.spec.amplitude, 1e-12);
  const int window = 8;
  const double productive_rtol = 2.5e-3;  // relative improvement per window
  double crawl_budget = 2.0 * ensemble.spec.amplitude;

  Eigen::VectorXcd best_u = u;
  double best_value = value;
  Eigen::VectorXcd prev_u, prev_g;
  bool have_prev = false;
  double t = 1.0;
  double window_value = value;
  double window_distance = 0.0;
  if (value > 1e-24 && g0 > 1e-14) {
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      if (prob.dual_norm(g) <= tol) break;
      if (iter > 0 && iter % window == 0) {
        if (window_value - value < productive_rtol * window_value) {
          crawl_budget -= window_distance;
          if (crawl_budget <= 0.0) break;
        }
        window_value = value;
        window_distance = 0.0;
      }
      if (have_prev) {
        const Eigen::VectorXcd s = u - prev_u;
        const Eigen::VectorXcd y = g - prev_g;
        const double sy = s.dot(y).real();
        if (sy > 0.0 && std::isfinite(sy))
          t = std::clamp(s.squaredNorm() / sy, 1e-14, 1e12);
      }
      const double g2 = g.squaredNorm();
      const double move = prob.primal_norm(g);
      double trial = move > 0.0 ? std::min(t, step_cap / move) : t;
      bool accepted = false;
      Eigen::VectorXcd u_next;
      double value_next = 0.0;
      for (int bt = 0; bt < 60; ++bt) {
        u_next = u - trial * g;
        value_next = prob.evaluate(u_next, false).value;
        if (std::isfinite(value_next) && value_next <= value - 1e-4 * trial * 2.0 * g2) {
          accepted = true;
          break;
        }
        trial *= 0.5;
      }
      if (!accepted) break;
      window_distance += prob.primal_norm(u_next - u);
      prev_u = u;
      prev_g = g;
      have_prev = true;
      u = u_next;
      ev = prob.evaluate(u, true);
      value = ev.value;
      g = ev.grad;
      t = trial;
      if (value < best_value) {
        best_value = value;
        best_u = u;
      }
    }
  }

  EecState result = init;
  result.psi = {prob.psi_of(best_u), prob.qg};
  result.f = {prob.f_of(best_u), prob.lg};
  return result;
}

StabilityVerdict classify(const EecState& rigid, const PerturbationEnsemble& ensemble,
                          const SolveOptions& options, double kappa) {
  if (kappa <= 0.0) throw std::invalid_argument("classify: kappa must be positive");
  const EecState optimum = optimize_overdetermined(rigid, ensemble, options);
  StabilityVerdict v;
  v.kappa = kappa;
  v.amplitude = ensemble.spec.amplitude;
  v.drift = l2_distance(rigid.psi, optimum.psi) + l2_distance(rigid.f, optimum.f);
  v.residual_at_rigid = assemble_residuals(rigid, ensemble).norm();
  v.residual_at_optimum = assemble_residuals(optimum, ensemble).norm();
  v.stable = v.drift <= kappa * ensemble.spec.amplitude;
  return v;
}

double toy_residual(double x, double y, double dx, double dy) {
  return (x + dx) * (x + dx) - (y + dy) * (y + dy);
}

ToyEnsemble generate_toy_ensemble(int count, double amplitude, std::uint64_t seed) {
  if (count < 10) throw std::invalid_argument("generate_toy_ensemble: count must be >= 10");
  if (amplitude <= 0.0)
    throw std::invalid_argument("generate_toy_ensemble: amplitude must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, amplitude);
  ToyEnsemble ens;
  ens.amplitude = amplitude;
  ens.seed = seed;
  const double bound = 3.0 * amplitude;
  for (int i = 0; i < count; ++i) {
    const double dx = std::clamp(normal(rng), -bound, bound);
    const double dy = std::clamp(normal(rng), -bound, bound);
    ens.deltas.emplace_back(dx, dy);
  }
  return ens;
}

double toy_objective(const ToyEnsemble& ensemble, double x, double y) {
  double acc = 0.0;
  for (const auto& [dx, dy] : ensemble.deltas) {
    const double r = toy_residual(x, y, dx, dy);
    acc += r * r;
  }
  return acc;
}

std::pair<double, double> toy_optimize(const ToyEnsemble& ensemble,
                                       std::pair<double, double> init) {
  if (ensemble.deltas.size() < 10)
    throw std::invalid_argument("toy_optimize: ensemble too small");
  double x = init.first, y = init.second;
  double value = toy_objective(ensemble, x, y);
  auto grad = [&](double px, double py) {
    double gx = 0.0, gy = 0.0;
    for (const auto& [dx, dy] : ensemble.deltas) {
      const double r = toy_residual(px, py, dx, dy);
      gx += 4.0 * r * (px + dx);
      gy -= 4.0 * r * (py + dy);
    }
    return std::pair{gx, gy};
  };
  auto [gx, gy] = grad(x, y);
  const double g0 = std::hypot(gx, gy);
  const double tol = std::max(1e-16, 1e-10 * g0);
  double t = 1.0;
  double px = x, py = y, pgx = gx, pgy = gy;
  bool have_prev = false;
  for (int iter = 0; iter < 500000; ++iter) {
    const double gnorm = std::hypot(gx, gy);
    if (gnorm <= tol) break;
    if (have_prev) {
      const double sx = x - px, sy_ = y - py;
      const double yx = gx - pgx, yy = gy - pgy;
      const double s_dot_y = sx * yx + sy_ * yy;
      if (s_dot_y > 0.0 && std::isfinite(s_dot_y))
        t = std::clamp((sx * sx + sy_ * sy_) / s_dot_y, 1e-16, 1e12);
    }
    double trial = t;
    bool accepted = false;
    double nx = x, ny = y, nvalue = value;
    for (int bt = 0; bt < 80; ++bt) {
      nx = x - trial * gx;
      ny = y - trial * gy;
      nvalue = toy_objective(ensemble, nx, ny);
      if (nvalue <= value - 1e-4 * trial * gnorm * gnorm) {
        accepted = true;
        break;
      }
      trial *= 0.5;
    }
    if (!accepted) break;
    px = x;
    py = y;
    pgx = gx;
    pgy = gy;
    have_prev = true;
    x = nx;
    y = ny;
    value = nvalue;
    std::tie(gx, gy) = grad(x, y);
    t = trial;
  }
  return {x, y};
}

std::vector<std::pair<double, double>> toy_g_profile(const std::vector<double>& x_values,
                                                     double dx, double dy) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(x_values.size());
  for (double x : x_values) curve.emplace_back(x, toy_residual(x, x, dx, dy));
  return curve;
}

DensityCurves density_comparison(const EecState& state, const SampledFunction& delta) {
  if (!(state.psi.grid == delta.grid))
    throw std::invalid_argument("density_comparison: grid mismatch");
  DensityCurves curves;
  const int n = state.psi.grid.n_points;
  curves.x = state.psi.grid.points();
  curves.ideal.resize(n);
  curves.real.resize(n);
  for (int j = 0; j < n; ++j) {
    curves.ideal[j] = std::norm(state.psi.values[j]);
    curves.real[j] = std::norm(state.psi.values[j] + delta.values[j]);
  }
  return curves;
}

}  // namespace oscstab
