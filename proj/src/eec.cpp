#include "oscstab/eec.hpp"

#include <cmath>

namespace oscstab {

double kinetic_energy(const SampledFunction& f, double omega) {
  require_finite(f, "kinetic_energy");
  const SampledFunction dual = transform_inverse(f, f.grid, omega);
  return potential_energy(dual, omega);
}

double potential_energy(const SampledFunction& f, double omega) {
  require_finite(f, "potential_energy");
  const Eigen::VectorXd w = f.grid.weights();
  double acc = 0.0;
  for (int j = 0; j < f.grid.n_points; ++j) {
    const double x = f.grid.point(j);
    acc += w[j] * omega * omega * x * x * std::norm(f.values[j]);
  }
  return 0.5 * acc;
}

ConditionReport evaluate_conditions(const EecState& state) {
  ConditionReport r;
  r.norm_psi_defect = std::abs(squared_norm(state.psi) - 1.0);
  r.decay_psi = boundary_magnitude(state.psi);
  r.energy_expectation = kinetic_energy(state.psi, state.config.omega) +
                         potential_energy(state.psi, state.config.omega);
  return r;
}

EecResidual evaluate_eec(const EecState& state) {
  const double omega = state.config.omega;
  EecResidual r;
  r.balance_q = kinetic_energy(state.psi, omega) - potential_energy(state.f, omega);
  r.balance_l = kinetic_energy(state.f, omega) - potential_energy(state.psi, omega);
  r.norm_f_defect = std::abs(squared_norm(state.f) - 1.0);
  r.norm_psi_defect = std::abs(squared_norm(state.psi) - 1.0);
  r.decay_psi = boundary_magnitude(state.psi);
  r.decay_transform =
      boundary_magnitude(transform_forward(state.f, state.psi.grid, omega));
  return r;
}

double functional_I(const EecState& state) {
  const double omega = state.config.omega;
  return kinetic_energy(state.psi, omega) - potential_energy(state.f, omega);
}

double expected_energy(const SampledFunction& psi, const OscillatorConfig& config) {
  const double defect = std::abs(squared_norm(psi) - 1.0);
  if (defect > 0.1)
    throw std::invalid_argument("expected_energy: input not normalized (defect > 0.1)");
  return kinetic_energy(psi, config.omega) + potential_energy(psi, config.omega);
}

}  // namespace oscstab
