#include <doctest.h>

#include <cmath>
#include <complex>

#include "oscstab/variational.hpp"

using namespace oscstab;

namespace {
const Grid kGrid = make_grid(8.0, 257);

EecState hermite_pair(int n, double omega = 1.0) {
  const Grid g = make_grid(8.0 / std::sqrt(omega), 257);
  return {hermite_state(n, omega, g), hermite_state(n, omega, g), {omega}};
}

double aligned_distance(const SampledFunction& a, const SampledFunction& b) {
  // Distance modulo a global sign (the remaining gauge of a real init).
  return std::min(l2_distance(a, b), l2_distance(a, {-b.values, b.grid}));
}
}  // namespace

TEST_CASE("stationarity_residual at exact Hermite pairs") {
  for (int n = 0; n <= 3; ++n) {
    const auto [r1, r2] = stationarity_residual(hermite_pair(n), multipliers_for(n, 1.0));
    CHECK(r1 < 5e-3);
    CHECK(r2 < 5e-3);
  }
  // omega = 2 ground state.
  const auto [s1, s2] = stationarity_residual(hermite_pair(0, 2.0), multipliers_for(0, 2.0));
  CHECK(s1 < 5e-3);
  CHECK(s2 < 5e-3);
}

TEST_CASE("stationarity_residual detects wrong multipliers") {
  // (h0, h0) with the n=1 multipliers: both equations pick up the level
  // mismatch (lambda2 and lambda3 each off by omega), so r1 = r2 = 1.
  const Multipliers wrong{-1.0, 1.5, -1.5};
  const auto [r1, r2] = stationarity_residual(hermite_pair(0), wrong);
  CHECK(r1 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r2 == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("stationarity_residual of the zero state vanishes") {
  const EecState zero{zero_function(kGrid), zero_function(kGrid), {1.0}};
  const auto [r1, r2] = stationarity_residual(zero, {-1.0, 0.5, -0.5});
  CHECK(r1 == 0.0);
  CHECK(r2 == 0.0);
}

TEST_CASE("solve converges to the ground state from a nearby even init") {
  EecState init = hermite_pair(0);
  const SampledFunction h2 = hermite_state(2, 1.0, kGrid);
  init.psi.values += 0.05 * h2.values;
  init.f.values += 0.05 * h2.values;

  SolveOptions opts;
  const VariationalResult res = solve(init, opts);
  REQUIRE(res.converged);
  const double energy = expected_energy(res.state.psi, res.state.config);
  CHECK(energy == doctest::Approx(0.5).epsilon(2e-2));
  CHECK(aligned_distance(res.state.psi, hermite_state(0, 1.0, kGrid)) <= 5e-2);
  CHECK(res.multipliers.lambda1 == doctest::Approx(-1.0).epsilon(5e-2));
  CHECK(res.multipliers.lambda2 == doctest::Approx(0.5).epsilon(5e-2));
  CHECK(res.multipliers.lambda3 == doctest::Approx(-0.5).epsilon(5e-2));
  CHECK(res.descent_violation <= 1e-12);
  CHECK(std::abs(res.constraint_residuals.balance_q) <= opts.constraint_tolerance);
  CHECK(std::abs(res.constraint_residuals.balance_l) <= opts.constraint_tolerance);
  CHECK(res.constraint_residuals.norm_psi_defect <= opts.constraint_tolerance);
  CHECK(res.constraint_residuals.norm_f_defect <= opts.constraint_tolerance);
}

TEST_CASE("solve from an odd init lands on the first excited level") {
  EecState init = hermite_pair(1);
  const SampledFunction h3 = hermite_state(3, 1.0, kGrid);
  init.psi.values += 0.05 * h3.values;
  init.f.values += 0.05 * h3.values;

  const VariationalResult res = solve(init, SolveOptions{});
  REQUIRE(res.converged);
  CHECK(expected_energy(res.state.psi, res.state.config) ==
        doctest::Approx(1.5).epsilon(2e-2));
}

TEST_CASE("an exact stationary pair barely moves") {
  const EecState init = hermite_pair(0);
  const VariationalResult res = solve(init, SolveOptions{});
  REQUIRE(res.converged);
  CHECK(l2_distance(res.state.psi, init.psi) <= 1e-3);
  CHECK(l2_distance(res.state.f, init.f) <= 1e-3);
  CHECK(res.objective_trace.size() >= 1);
}

TEST_CASE("solve rejects a near-zero init") {
  const EecState zero{zero_function(kGrid), zero_function(kGrid), {1.0}};
  CHECK_THROWS_AS(solve(zero, SolveOptions{}), std::invalid_argument);
}

TEST_CASE("solve validates options") {
  const EecState init = hermite_pair(0);
  SolveOptions bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(solve(init, bad), std::invalid_argument);
  bad = SolveOptions{};
  bad.gradient_tolerance = 0.0;
  CHECK_THROWS_AS(solve(init, bad), std::invalid_argument);
  bad = SolveOptions{};
  bad.penalty_growth = 1.0;
  CHECK_THROWS_AS(solve(init, bad), std::invalid_argument);
}

TEST_CASE("random_init is deterministic, normalized, and seed-sensitive") {
  const EecState a = random_init(kGrid, 1.0, 4, 7);
  const EecState b = random_init(kGrid, 1.0, 4, 7);
  const EecState c = random_init(kGrid, 1.0, 4, 8);
  CHECK(a.psi.values == b.psi.values);
  CHECK(a.f.values == b.f.values);
  CHECK(l2_distance(a.psi, c.psi) > 1e-3);
  CHECK(std::abs(l2_norm(a.psi) - 1.0) < 1e-8);
  CHECK(std::abs(l2_norm(a.f) - 1.0) < 1e-8);
  CHECK_THROWS_AS(random_init(kGrid, 1.0, 0, 7), std::invalid_argument);
}

TEST_CASE("quantization_report") {
  VariationalResult r0;
  r0.converged = true;
  r0.state = hermite_pair(0);
  VariationalResult r1 = r0;
  r1.state = hermite_pair(1);
  const auto report = quantization_report({r0, r1});
  REQUIRE(report.size() == 2);
  CHECK(report[0].nearest_level == 0);
  CHECK(report[0].energy == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(report[0].defect < 1e-3);
  CHECK(report[1].nearest_level == 1);
  CHECK(report[1].energy == doctest::Approx(1.5).epsilon(1e-3));

  VariationalResult bad;
  bad.converged = false;
  bad.state = hermite_pair(0);
  CHECK_THROWS_AS(quantization_report({bad}), std::invalid_argument);
}

TEST_CASE("paired mode keeps F locked to the transform of psi") {
  const EecState init = hermite_pair(0);
  SolveOptions opts;
  opts.paired_mode = true;
  const VariationalResult res = solve(init, opts);
  REQUIRE(res.converged);
  const SampledFunction implied =
      transform_inverse(res.state.psi, res.state.f.grid, res.state.config.omega);
  CHECK(l2_distance(res.state.f, implied) < 1e-8);
}
