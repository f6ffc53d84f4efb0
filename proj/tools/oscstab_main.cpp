// Batch CLI tying the modules into reproducible experiments.
// Exit codes: 0 success, 1 tolerance failure, 2 bad input, 3 non-convergence.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oscstab/io.hpp"
#include "oscstab/spectrum.hpp"
#include "oscstab/stability.hpp"
#include "oscstab/variational.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oscstab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTolerance = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitNoConvergence = 3;

struct ExperimentConfig {
  double omega = 1.0;
  double grid_half_width = 0.0;  // 0 means 8/sqrt(omega)
  int grid_points = 257;
  int mode_index = 0;
  int levels = 6;
  double kappa = 10.0;
  double tol = 1e-4;
  PerturbationSpec perturbation;
  SolveOptions solver;
  std::string output_dir = ".";

  double half_width() const {
    return grid_half_width > 0.0 ? grid_half_width : 8.0 / std::sqrt(omega);
  }
  Grid grid() const { return make_grid(half_width(), grid_points); }
};

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j = json::parse(in);
  cfg.omega = j.value("omega", cfg.omega);
  cfg.grid_half_width = j.value("grid_half_width", cfg.grid_half_width);
  cfg.grid_points = j.value("grid_points", cfg.grid_points);
  cfg.mode_index = j.value("mode_index", cfg.mode_index);
  cfg.levels = j.value("levels", cfg.levels);
  cfg.kappa = j.value("kappa", cfg.kappa);
  cfg.tol = j.value("tol", cfg.tol);
  if (j.contains("perturbation")) {
    const auto& p = j["perturbation"];
    cfg.perturbation.count = p.value("count", cfg.perturbation.count);
    cfg.perturbation.amplitude = p.value("amplitude", cfg.perturbation.amplitude);
    cfg.perturbation.seed = p.value("seed", cfg.perturbation.seed);
    cfg.perturbation.basis_size = p.value("basis_size", cfg.perturbation.basis_size);
    cfg.perturbation.perturb_f = p.value("perturb_f", cfg.perturbation.perturb_f);
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    cfg.solver.max_iterations = s.value("max_iterations", cfg.solver.max_iterations);
    cfg.solver.gradient_tolerance =
        s.value("gradient_tolerance", cfg.solver.gradient_tolerance);
    cfg.solver.constraint_tolerance =
        s.value("constraint_tolerance", cfg.solver.constraint_tolerance);
    cfg.solver.penalty_growth = s.value("penalty_growth", cfg.solver.penalty_growth);
    cfg.solver.paired_mode = s.value("paired_mode", cfg.solver.paired_mode);
    cfg.solver.seed = s.value("seed", cfg.solver.seed);
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
}

fs::path prepare_output_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  // Probe writability up front so every command fails uniformly.
  const fs::path probe = dir / ".oscstab_probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output_dir not writable: " + dir.string());
  }
  fs::remove(probe, ec);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  io::write_text_atomic(path, j.dump(2) + "\n");
}

int cmd_eigen(const ExperimentConfig& cfg) {
  const fs::path dir = prepare_output_dir(cfg);
  const Grid grid = cfg.grid();
  const auto op = hamiltonian(grid, cfg.omega, 1.0);
  const int k = std::max(cfg.levels, cfg.mode_index + 1);
  EigenSolution sol;
  try {
    sol = solve_spectrum(op, k);
  } catch (const ConvergenceError& e) {
    std::cerr << "eigen: " << e.what() << "\n";
    return kExitNoConvergence;
  }
  json out;
  out["omega"] = cfg.omega;
  out["eigenvalues"] = json::array();
  out["defects"] = json::array();
  out["functions"] = json::array();
  for (int n = 0; n < k; ++n) {
    out["eigenvalues"].push_back(sol.eigenvalues[n]);
    out["defects"].push_back(std::abs(sol.eigenvalues[n] - (n + 0.5) * cfg.omega));
    const std::string name = "eigenfunction_" + std::to_string(n) + ".csv";
    io::write_text_atomic(dir / name, io::to_csv(sol.eigenfunctions[n]));
    out["functions"].push_back(name);
  }
  write_json(dir / "eigenvalues.json", out);
  return kExitOk;
}

int cmd_check(const ExperimentConfig& cfg, const std::string& psi_path,
              const std::string& f_path) {
  const fs::path dir = prepare_output_dir(cfg);
  EecState state;
  state.config = {cfg.omega};
  state.psi = io::read_sampled_function(psi_path);
  state.f = io::read_sampled_function(f_path);
  const ConditionReport report = evaluate_conditions(state);
  const EecResidual residual = evaluate_eec(state);
  write_json(dir / "condition_report.json", io::to_json(report));
  write_json(dir / "eec_residual.json", io::to_json(residual));
  const double worst =
      std::max({std::abs(residual.balance_q), std::abs(residual.balance_l),
                residual.norm_f_defect, residual.norm_psi_defect, residual.decay_psi,
                residual.decay_transform});
  return worst <= cfg.tol ? kExitOk : kExitTolerance;
}

int cmd_solve(const ExperimentConfig& cfg) {
  const fs::path dir = prepare_output_dir(cfg);
  const Grid grid = cfg.grid();
  const EecState init =
      random_init(grid, cfg.omega, cfg.perturbation.basis_size, cfg.solver.seed);
  const VariationalResult result = solve(init, cfg.solver);

  write_json(dir / "variational_result.json", io::to_json(result));
  io::write_text_atomic(dir / "psi.csv", io::to_csv(result.state.psi));
  io::write_text_atomic(dir / "f.csv", io::to_csv(result.state.f));
  std::string trace = "iteration,objective\n";
  for (std::size_t i = 0; i < result.objective_trace.size(); ++i)
    trace += std::to_string(i) + "," + io::format_double(result.objective_trace[i]) + "\n";
  io::write_text_atomic(dir / "trace.csv", trace);

  if (!result.converged) return kExitNoConvergence;
  const auto report = quantization_report({result});
  write_json(dir / "quantization.json", io::to_json(report.front()));
  return kExitOk;
}

int cmd_stability(const ExperimentConfig& cfg) {
  const fs::path dir = prepare_output_dir(cfg);
  const Grid grid = cfg.grid();
  const double omega = cfg.omega;

  // Comparison set: the two lowest rigid solutions, a width-2/omega Gaussian
  // (built directly; it decays too slowly for hermite_state's boundary
  // check), and the equal-parity mix.
  std::vector<std::pair<std::string, SampledFunction>> states;
  states.emplace_back("h0", hermite_state(0, omega, grid));
  states.emplace_back("h1", hermite_state(1, omega, grid));
  {
    const double w = 2.0 / omega;
    SampledFunction g = zero_function(grid);
    for (int i = 0; i < grid.n_points; ++i)
      g.values[i] = std::exp(-grid.point(i) * grid.point(i) / (2.0 * w * w));
    g.values /= l2_norm(g);
    states.emplace_back("squeezed_gaussian", std::move(g));
  }
  {
    SampledFunction mix = hermite_state(0, omega, grid);
    mix.values = (mix.values + hermite_state(1, omega, grid).values) / std::sqrt(2.0);
    states.emplace_back("mix_h0_h1", std::move(mix));
  }

  json table = json::array();
  for (const auto& [name, psi] : states) {
    EecState state{psi, psi, {omega}};
    const auto ensemble = generate_ensemble(cfg.perturbation, grid, omega);
    const StabilityVerdict v = classify(state, ensemble, cfg.solver, cfg.kappa);
    json row = io::to_json(v);
    row["state"] = name;
    table.push_back(row);
  }
  write_json(dir / "stability_table.json", table);

  // Drift-vs-epsilon sweep on the ground state.
  std::string sweep = "epsilon,drift\n";
  EecState ground{hermite_state(0, omega, grid), hermite_state(0, omega, grid), {omega}};
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    PerturbationSpec spec = cfg.perturbation;
    spec.amplitude = eps;
    const auto ensemble = generate_ensemble(spec, grid, omega);
    const StabilityVerdict v = classify(ground, ensemble, cfg.solver, cfg.kappa);
    sweep += io::format_double(eps) + "," + io::format_double(v.drift) + "\n";
  }
  io::write_text_atomic(dir / "drift_vs_epsilon.csv", sweep);
  return kExitOk;
}

// Direct scan of the stacked toy objective over [-2,2]^2.
std::pair<double, double> toy_brute_force(const ToyEnsemble& ensemble, double step) {
  double best_x = 0.0, best_y = 0.0;
  double best = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(std::lround(4.0 / step));
  for (int i = 0; i <= n; ++i) {
    const double x = -2.0 + i * step;
    for (int j = 0; j <= n; ++j) {
      const double y = -2.0 + j * step;
      const double s = toy_objective(ensemble, x, y);
      if (s < best) {
        best = s;
        best_x = x;
        best_y = y;
      }
    }
  }
  return {best_x, best_y};
}

int cmd_toy(const ExperimentConfig& cfg) {
  const fs::path dir = prepare_output_dir(cfg);
  const auto ensemble = generate_toy_ensemble(
      cfg.perturbation.count, cfg.perturbation.amplitude, cfg.perturbation.seed);
  const auto optimum = toy_optimize(ensemble, {1.0, 1.0});
  const auto oracle = toy_brute_force(ensemble, 1e-3);

  json out;
  out["optimum"] = {optimum.first, optimum.second};
  out["brute_force"] = {oracle.first, oracle.second};
  out["distance_to_origin"] = std::hypot(optimum.first, optimum.second);
  out["distance_to_oracle"] =
      std::hypot(optimum.first - oracle.first, optimum.second - oracle.second);
  write_json(dir / "toy_result.json", out);

  const auto [dx, dy] = ensemble.deltas.front();
  std::vector<double> xs;
  for (int i = 0; i <= 400; ++i) xs.push_back(-2.0 + i * 0.01);
  std::string csv = "x,g\n";
  for (const auto& [x, g] : toy_g_profile(xs, dx, dy))
    csv += io::format_double(x) + "," + io::format_double(g) + "\n";
  io::write_text_atomic(dir / "toy_g_profile.csv", csv);
  return kExitOk;
}

int cmd_figures(const ExperimentConfig& cfg) {
  const fs::path dir = prepare_output_dir(cfg);
  const Grid grid = cfg.grid();
  EecState state{hermite_state(cfg.mode_index, cfg.omega, grid),
                 hermite_state(cfg.mode_index, cfg.omega, grid),
                 {cfg.omega}};
  PerturbationSpec spec = cfg.perturbation;
  const auto ensemble = generate_ensemble(spec, grid, cfg.omega);
  const auto curves = density_comparison(state, ensemble.deltas_psi.front());
  std::string csv = "x,ideal,real\n";
  for (int j = 0; j < curves.x.size(); ++j)
    csv += io::format_double(curves.x[j]) + "," + io::format_double(curves.ideal[j]) +
           "," + io::format_double(curves.real[j]) + "\n";
  io::write_text_atomic(dir / "density_comparison.csv", csv);

  const auto toy = generate_toy_ensemble(std::max(cfg.perturbation.count, 10),
                                         cfg.perturbation.amplitude,
                                         cfg.perturbation.seed);
  const auto [dx, dy] = toy.deltas.front();
  std::vector<double> xs;
  for (int i = 0; i <= 400; ++i) xs.push_back(-2.0 + i * 0.01);
  std::string gcsv = "x,g\n";
  for (const auto& [x, g] : toy_g_profile(xs, dx, dy))
    gcsv += io::format_double(x) + "," + io::format_double(g) + "\n";
  io::write_text_atomic(dir / "toy_g_profile.csv", gcsv);

  const std::string script =
      "set datafile separator ','\n"
      "set terminal pngcairo size 900,400\n"
      "set output 'density_comparison.png'\n"
      "plot 'density_comparison.csv' using 1:2 with lines title 'ideal', \\\n"
      "     'density_comparison.csv' using 1:3 with lines title 'real'\n"
      "set output 'toy_g_profile.png'\n"
      "plot 'toy_g_profile.csv' using 1:2 with lines title 'g(x)'\n";
  io::write_text_atomic(dir / "plots.gp", script);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium-condition experiments for the 1-D harmonic oscillator"};
  app.require_subcommand(1);
  app.fallthrough();  // accept the shared options after the subcommand name too

  ExperimentConfig cfg;
  std::string config_path, psi_path, f_path;

  // Flags win over the config file: record which were passed, apply after.
  double omega = 0.0, tol = 0.0, epsilon = 0.0;
  std::int64_t seed = -1;
  int count = 0;
  std::string output_dir;
  bool paired = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--omega", omega, "oscillator angular frequency");
  app.add_option("--seed", seed, "RNG seed (solver and perturbations)");
  app.add_option("--tol", tol, "tolerance for check / reports");
  app.add_option("--epsilon", epsilon, "perturbation amplitude");
  app.add_option("--count", count, "perturbation ensemble size");
  app.add_option("--output-dir", output_dir, "output directory");
  app.add_flag("--paired", paired, "eliminate F as the inverse transform of psi");
  app.add_option("--grid-points", cfg.grid_points, "number of grid points");
  app.add_option("--half-width", cfg.grid_half_width, "grid half width");
  app.add_option("--mode", cfg.mode_index, "oscillator mode index");

  auto* eigen = app.add_subcommand("eigen", "solve the stationarity eigenproblem");
  auto* check = app.add_subcommand("check", "evaluate conditions and EEC residuals");
  check->add_option("--psi", psi_path, "psi CSV file")->required();
  check->add_option("--f", f_path, "F CSV file")->required();
  auto* solve_cmd = app.add_subcommand("solve", "variational solve from a random init");
  auto* stability = app.add_subcommand("stability", "perturbation stability verdicts");
  auto* toy = app.add_subcommand("toy", "x^2 - y^2 analogue experiment");
  auto* figures = app.add_subcommand("figures", "emit figure data and plot script");

  // Per-command grid defaults; eigen wants the fine grid.
  cfg.grid_points = 0;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    if (omega > 0.0) cfg.omega = omega;
    if (tol > 0.0) cfg.tol = tol;
    if (epsilon > 0.0) cfg.perturbation.amplitude = epsilon;
    if (count > 0) cfg.perturbation.count = count;
    if (seed >= 0) {
      cfg.perturbation.seed = static_cast<std::uint64_t>(seed);
      cfg.solver.seed = static_cast<std::uint64_t>(seed);
    }
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (paired) cfg.solver.paired_mode = true;
    if (cfg.grid_points == 0) cfg.grid_points = eigen->parsed() ? 1025 : 257;

    if (eigen->parsed()) return cmd_eigen(cfg);
    if (check->parsed()) return cmd_check(cfg, psi_path, f_path);
    if (solve_cmd->parsed()) return cmd_solve(cfg);
    if (stability->parsed()) return cmd_stability(cfg);
    if (toy->parsed()) return cmd_toy(cfg);
    if (figures->parsed()) return cmd_figures(cfg);
    return kExitBadInput;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
}
