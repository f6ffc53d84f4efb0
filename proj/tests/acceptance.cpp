// Acceptance suite: one PASS/FAIL line per criterion, exit code is the
// number of failures. Takes the CLI path as argv[1] for the end-to-end
// criteria; everything else runs through the library directly.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oscstab/io.hpp"
#include "oscstab/stability.hpp"
#include "oscstab/variational.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oscstab;

namespace {

std::string g_cli;
int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << number << " (" << name
            << "): " << detail << "\n";
  if (!pass) ++g_failures;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return status < 0 ? -1 : WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "oscstab_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 1. Lowest six eigenvalues equal (n+1/2) omega, both at omega 1 and 2.
void criterion_quantization() {
  double worst1 = 0.0, worst2 = 0.0;
  {
    const auto sol = solve_spectrum(hamiltonian(make_grid(8.0, 1025), 1.0, 1.0), 6);
    for (int n = 0; n < 6; ++n)
      worst1 = std::max(worst1, std::abs(sol.eigenvalues[n] - (n + 0.5)));
  }
  {
    const Grid g = make_grid(8.0 / std::sqrt(2.0), 1025);
    const auto sol = solve_spectrum(hamiltonian(g, 2.0, 1.0), 6);
    for (int n = 0; n < 6; ++n)
      worst2 = std::max(worst2, std::abs(sol.eigenvalues[n] - (2 * n + 1)));
  }
  report(1, "energy quantization", worst1 <= 1e-3 && worst2 <= 2e-3,
         "max defect omega=1: " + io::format_double(worst1) +
             ", omega=2: " + io::format_double(worst2));
}

// 2. The two stationarity ODEs hold at the rigid pairs with the closed-form
// multipliers.
void criterion_multipliers() {
  const Grid grid = make_grid(8.0, 1025);
  double worst = 0.0;
  for (int n = 0; n <= 3; ++n) {
    const SampledFunction hn = hermite_state(n, 1.0, grid);
    const auto [r1, r2] =
        stationarity_residual({hn, hn, {1.0}}, multipliers_for(n, 1.0));
    worst = std::max({worst, r1, r2});
  }
  report(2, "multiplier consistency", worst <= 5e-3,
         "max ODE residual: " + io::format_double(worst));
}

// 3. All six residuals of the rigid pairs are tiny.
void criterion_feasibility() {
  const Grid grid = make_grid(8.0, 1025);
  double worst_balance = 0.0, worst_decay = 0.0;
  for (int n = 0; n <= 3; ++n) {
    const SampledFunction hn = hermite_state(n, 1.0, grid);
    const EecResidual r = evaluate_eec({hn, hn, {1.0}});
    worst_balance = std::max({worst_balance, std::abs(r.balance_q),
                              std::abs(r.balance_l), r.norm_f_defect,
                              r.norm_psi_defect});
    worst_decay = std::max({worst_decay, r.decay_psi, r.decay_transform});
  }
  report(3, "EEC feasibility", worst_balance <= 1e-5 && worst_decay <= 1e-8,
         "max balance/norm residual: " + io::format_double(worst_balance) +
             ", max decay: " + io::format_double(worst_decay));
}

// 4. Hermite states are transform eigenfunctions with eigenvalue (-i)^n;
// Parseval holds.
void criterion_self_reciprocity() {
  const Grid grid = make_grid(8.0, 1025);
  double worst_sup = 0.0;
  for (int n = 0; n <= 4; ++n) {
    const SampledFunction hn = hermite_state(n, 1.0, grid);
    const SampledFunction t = transform_forward(hn, grid, 1.0);
    const Complex phase = std::pow(Complex(0.0, -1.0), n);
    worst_sup = std::max(worst_sup, (t.values - phase * hn.values).cwiseAbs().maxCoeff());
  }
  SampledFunction mix = hermite_state(0, 1.0, grid);
  mix.values += Complex(0.0, 0.7) * hermite_state(3, 1.0, grid).values;
  const double parseval =
      std::abs(squared_norm(transform_forward(mix, grid, 1.0)) - squared_norm(mix));
  report(4, "transform self-reciprocity", worst_sup <= 1e-5 && parseval <= 1e-6,
         "max sup defect: " + io::format_double(worst_sup) +
             ", Parseval defect: " + io::format_double(parseval));
}

// 5. Twenty seeded random-init solves all converge onto quantized levels.
void criterion_variational_experiment() {
  const Grid grid = make_grid(8.0, 257);
  const auto start = std::chrono::steady_clock::now();
  std::vector<VariationalResult> results;
  int converged_count = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SolveOptions opts;
    opts.seed = seed;
    const EecState init = random_init(grid, 1.0, 4, seed);
    results.push_back(solve(init, opts));
    if (results.back().converged) ++converged_count;
  }
  double worst_defect = 0.0;
  std::string detail;
  bool pass = converged_count == 20;
  if (pass) {
    for (const auto& entry : quantization_report(results))
      worst_defect = std::max(worst_defect, entry.defect);
    pass = worst_defect <= 5e-2;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  pass = pass && seconds < 60.0;
  report(5, "variational quantization", pass,
         std::to_string(converged_count) + "/20 converged, max defect " +
             io::format_double(worst_defect) + ", " + io::format_double(seconds) + " s");
}

// Brute-force grid-search oracle for the toy optimum, step 1e-3 on [-2,2]^2.
std::pair<double, double> toy_oracle(const ToyEnsemble& ensemble) {
  double best_x = 0.0, best_y = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 4000; ++i) {
    const double x = -2.0 + i * 1e-3;
    for (int j = 0; j <= 4000; ++j) {
      const double y = -2.0 + j * 1e-3;
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

// 6. The toy optimum is the cone point (0,0); (1,1) is unstable, (0,0) stable.
void criterion_toy() {
  const double eps = 0.01;
  const ToyEnsemble ensemble = generate_toy_ensemble(100, eps, 1);
  const auto [x, y] = toy_optimize(ensemble, {1.0, 1.0});
  const auto [ox, oy] = toy_oracle(ensemble);
  const double to_origin = std::hypot(x, y);
  const double to_oracle = std::hypot(x - ox, y - oy);
  const double drift_rigid = std::hypot(x - 1.0, y - 1.0);
  const auto [sx, sy] = toy_optimize(ensemble, {0.0, 0.0});
  const double drift_origin = std::hypot(sx, sy);
  const bool pass = to_origin <= 0.05 && to_oracle <= 1e-2 && drift_rigid >= 1.0 &&
                    drift_origin <= 10 * eps;
  report(6, "toy analogue", pass,
         "optimum (" + io::format_double(x) + ", " + io::format_double(y) +
             "), oracle distance " + io::format_double(to_oracle) + ", drifts " +
             io::format_double(drift_rigid) + " / " + io::format_double(drift_origin));
}

// 7. The g profile is the line 2(dx-dy) x + (dx^2-dy^2), both in the library
// and in the emitted CSV.
void criterion_g_profile() {
  const double dx = 0.013, dy = -0.007;
  std::vector<double> xs;
  for (int i = 0; i <= 400; ++i) xs.push_back(-2.0 + i * 0.01);
  const auto prof = toy_g_profile(xs, dx, dy);
  double worst = 0.0;
  for (const auto& [x, g] : prof)
    worst = std::max(worst, std::abs(g - (2.0 * (dx - dy) * x + dx * dx - dy * dy)));

  const fs::path dir = fresh_dir("toy_csv");
  bool csv_ok =
      run_cli("toy --count 100 --epsilon 0.01 --seed 1 --output-dir " + dir.string()) == 0;
  double csv_worst = 0.0;
  if (csv_ok) {
    const ToyEnsemble ensemble = generate_toy_ensemble(100, 0.01, 1);
    const auto [cdx, cdy] = ensemble.deltas.front();
    std::istringstream in(slurp(dir / "toy_g_profile.csv"));
    std::string line;
    std::getline(in, line);  // header
    int rows = 0;
    while (std::getline(in, line)) {
      double x = 0.0, g = 0.0;
      if (std::sscanf(line.c_str(), "%lf,%lf", &x, &g) != 2) break;
      csv_worst = std::max(
          csv_worst, std::abs(g - (2.0 * (cdx - cdy) * x + cdx * cdx - cdy * cdy)));
      ++rows;
    }
    csv_ok = rows == 401;
  }
  report(7, "g profile line", worst <= 1e-10 && csv_ok && csv_worst <= 1e-10,
         "max library defect " + io::format_double(worst) + ", max CSV defect " +
             io::format_double(csv_worst));
}

// 8. Drift at the rigid ground state decreases with epsilon and is <= 10 eps
// at eps = 1e-4.
void criterion_drift_scaling() {
  const Grid grid = make_grid(8.0, 257);
  const SampledFunction h0 = hermite_state(0, 1.0, grid);
  const EecState rigid{h0, h0, {1.0}};
  SolveOptions opts;
  std::vector<double> drifts;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    PerturbationSpec spec;
    spec.amplitude = eps;
    spec.seed = 7;
    const auto ensemble = generate_ensemble(spec, grid, 1.0);
    drifts.push_back(classify(rigid, ensemble, opts).drift);
  }
  const bool monotone = drifts[0] > drifts[1] && drifts[1] > drifts[2];
  report(8, "drift scaling", monotone && drifts[2] <= 10 * 1e-4,
         "drifts " + io::format_double(drifts[0]) + " / " + io::format_double(drifts[1]) +
             " / " + io::format_double(drifts[2]));
}

// 9. The stability comparison experiment is deterministic, sound, and covers
// all four comparison states.
void criterion_stability_experiment() {
  const fs::path a = fresh_dir("stability_a");
  const fs::path b = fresh_dir("stability_b");
  const std::string args = "stability --seed 5 --epsilon 1e-3 --output-dir ";
  bool pass = run_cli(args + a.string()) == 0 && run_cli(args + b.string()) == 0;
  std::string detail = "CLI failed";
  if (pass) {
    pass = slurp(a / "stability_table.json") == slurp(b / "stability_table.json") &&
           slurp(a / "drift_vs_epsilon.csv") == slurp(b / "drift_vs_epsilon.csv");
    detail = pass ? "" : "outputs differ across reruns";
  }
  if (pass) {
    const json table = json::parse(slurp(a / "stability_table.json"));
    pass = table.size() == 4;
    std::vector<std::string> expected{"h0", "h1", "squeezed_gaussian", "mix_h0_h1"};
    for (std::size_t i = 0; pass && i < table.size(); ++i) {
      pass = table[i].at("state").get<std::string>() == expected[i] &&
             table[i].at("residual_at_optimum").get<double>() <=
                 table[i].at("residual_at_rigid").get<double>() * (1.0 + 1e-12);
    }
    detail = pass ? "deterministic, 4 rows, optimizer sound" : "table check failed";
  }
  report(9, "stability comparison experiment", pass, detail);
}

// 10. Reruns with identical config and seed are byte-identical, per command.
void criterion_determinism() {
  bool pass = true;
  std::string detail = "eigen, solve, toy all byte-identical";
  struct Case {
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases{
      {"eigen --seed 2", {"eigenvalues.json", "eigenfunction_0.csv"}},
      {"solve --seed 2", {"variational_result.json", "psi.csv", "f.csv", "trace.csv"}},
      {"toy --count 100 --epsilon 0.01 --seed 2", {"toy_result.json", "toy_g_profile.csv"}},
  };
  int idx = 0;
  for (const auto& c : cases) {
    const fs::path a = fresh_dir("det_a" + std::to_string(idx));
    const fs::path b = fresh_dir("det_b" + std::to_string(idx));
    ++idx;
    if (run_cli(c.args + " --output-dir " + a.string()) != 0 ||
        run_cli(c.args + " --output-dir " + b.string()) != 0) {
      pass = false;
      detail = "command failed: " + c.args;
      break;
    }
    for (const auto& f : c.files) {
      const std::string sa = slurp(a / f);
      if (sa.empty() || sa != slurp(b / f)) {
        pass = false;
        detail = "mismatch or empty: " + c.args + " -> " + f;
        break;
      }
    }
    if (!pass) break;
  }
  report(10, "determinism", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-cli>\n";
    return 99;
  }
  g_cli = argv[1];

  criterion_quantization();
  criterion_multipliers();
  criterion_feasibility();
  criterion_self_reciprocity();
  criterion_variational_experiment();
  criterion_toy();
  criterion_g_profile();
  criterion_drift_scaling();
  criterion_stability_experiment();
  criterion_determinism();

  if (g_failures == 0)
    std::cout << "ALL CRITERIA PASSED\n";
  else
    std::cout << "FAILURES: " << g_failures << "\n";
  return g_failures;
}
