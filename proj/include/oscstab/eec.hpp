#pragma once

#include "oscstab/grid.hpp"

namespace oscstab {

struct OscillatorConfig {
  double omega = 1.0;
};

/// The joint unknown of the equilibrium-condition system: psi lives on the
/// q-grid, f on the L-grid.
struct EecState {
  SampledFunction psi;
  SampledFunction f;
  OscillatorConfig config;
};

struct ConditionReport {
  double norm_psi_defect = 0.0;
  double decay_psi = 0.0;
  double energy_expectation = 0.0;
};

/// The six equilibrium-condition residuals: two signed energy balances, two
/// normalization defects, two boundary-decay magnitudes.
struct EecResidual {
  double balance_q = 0.0;
  double balance_l = 0.0;
  double norm_f_defect = 0.0;
  double norm_psi_defect = 0.0;
  double decay_psi = 0.0;
  double decay_transform = 0.0;
};

/// 1/2 integral |f'|^2, evaluated through the scaled transform as
/// 1/2 integral omega^2 x^2 |T f|^2 (Parseval). Spectrally accurate for
/// functions decayed at the grid boundary; the finite-difference route loses
/// the balance tolerances to O(h^2) stencil error.
double kinetic_energy(const SampledFunction& f, double omega);

/// 1/2 integral omega^2 x^2 |f|^2.
double potential_energy(const SampledFunction& f, double omega);

ConditionReport evaluate_conditions(const EecState& state);

EecResidual evaluate_eec(const EecState& state);

/// I(psi, F) = 1/2 int |psi'|^2 dq - 1/2 int omega^2 L^2 |F|^2 dL;
/// identical quadrature path to EecResidual::balance_q.
double functional_I(const EecState& state);

/// Total oscillator energy expectation. Throws if the norm defect exceeds 0.1.
double expected_energy(const SampledFunction& psi, const OscillatorConfig& config);

}  // namespace oscstab
