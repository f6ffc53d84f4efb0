#include "oscstab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace oscstab::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string to_csv(const SampledFunction& f) {
  std::string out = "x,re,im\n";
  for (int j = 0; j < f.grid.n_points; ++j) {
    out += format_double(f.grid.point(j));
    out += ',';
    out += format_double(f.values[j].real());
    out += ',';
    out += format_double(f.values[j].imag());
    out += '\n';
  }
  return out;
}

SampledFunction sampled_function_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  std::vector<double> xs;
  std::vector<Complex> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x = 0.0, re = 0.0, im = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &re, &im) != 3)
      throw std::runtime_error("csv: malformed row: " + line);
    xs.push_back(x);
    values.emplace_back(re, im);
  }
  const int n = static_cast<int>(xs.size());
  if (n < 16) throw std::runtime_error("csv: fewer than 16 samples");
  const double spacing = (xs.back() - xs.front()) / (n - 1);
  if (!(spacing > 0.0)) throw std::runtime_error("csv: x column not increasing");
  for (int j = 0; j < n; ++j)
    if (std::abs(xs[j] - (xs.front() + j * spacing)) > 1e-9 * (1.0 + std::abs(xs[j])))
      throw std::runtime_error("csv: x column is not a uniform grid");
  SampledFunction f;
  f.grid = Grid{xs.front(), xs.back(), n, spacing};
  f.values = Eigen::Map<Eigen::VectorXcd>(values.data(), n);
  require_finite(f, "csv");
  return f;
}

SampledFunction read_sampled_function(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return sampled_function_from_csv(buf.str());
}

json to_json(const SampledFunction& f) {
  json values = json::array();
  for (int j = 0; j < f.grid.n_points; ++j)
    values.push_back({f.values[j].real(), f.values[j].imag()});
  return {{"grid",
           {{"x_min", f.grid.x_min}, {"x_max", f.grid.x_max}, {"n_points", f.grid.n_points}}},
          {"values", values}};
}

SampledFunction sampled_function_from_json(const json& j) {
  SampledFunction f;
  const auto& g = j.at("grid");
  f.grid.x_min = g.at("x_min").get<double>();
  f.grid.x_max = g.at("x_max").get<double>();
  f.grid.n_points = g.at("n_points").get<int>();
  if (f.grid.n_points < 2 || !(f.grid.x_max > f.grid.x_min))
    throw std::runtime_error("json: invalid grid");
  f.grid.spacing = (f.grid.x_max - f.grid.x_min) / (f.grid.n_points - 1);
  const auto& values = j.at("values");
  if (static_cast<int>(values.size()) != f.grid.n_points)
    throw std::runtime_error("json: value count does not match grid");
  f.values.resize(f.grid.n_points);
  for (int k = 0; k < f.grid.n_points; ++k)
    f.values[k] = Complex(values[k].at(0).get<double>(), values[k].at(1).get<double>());
  require_finite(f, "json");
  return f;
}

json to_json(const ConditionReport& r) {
  return {{"norm_psi_defect", r.norm_psi_defect},
          {"decay_psi", r.decay_psi},
          {"energy_expectation", r.energy_expectation}};
}

json to_json(const EecResidual& r) {
  return {{"balance_q", r.balance_q},
          {"balance_l", r.balance_l},
          {"norm_f_defect", r.norm_f_defect},
          {"norm_psi_defect", r.norm_psi_defect},
          {"decay_psi", r.decay_psi},
          {"decay_transform", r.decay_transform}};
}

json to_json(const Multipliers& m) {
  return {{"lambda1", m.lambda1}, {"lambda2", m.lambda2}, {"lambda3", m.lambda3}};
}

json to_json(const StabilityVerdict& v) {
  return {{"drift", v.drift},
          {"residual_at_rigid", v.residual_at_rigid},
          {"residual_at_optimum", v.residual_at_optimum},
          {"label", v.stable ? "stable" : "unstable"},
          {"kappa", v.kappa},
          {"amplitude", v.amplitude}};
}

json to_json(const QuantizationEntry& e) {
  return {{"energy", e.energy}, {"nearest_level", e.nearest_level}, {"defect", e.defect}};
}

json to_json(const VariationalResult& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"objective", r.objective},
          {"multipliers", to_json(r.multipliers)},
          {"constraint_residuals", to_json(r.constraint_residuals)},
          {"stationarity", {r.stationarity[0], r.stationarity[1]}},
          {"objective_trace", r.objective_trace}};
}

}  // namespace oscstab::io
