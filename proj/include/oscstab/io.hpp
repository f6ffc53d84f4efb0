#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "oscstab/stability.hpp"

namespace oscstab::io {

/// Write via a temp file in the same directory, then rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// CSV with one header row `x,re,im`.
std::string to_csv(const SampledFunction& f);
/// Parses the CSV format above; the grid is reconstructed from the x column.
/// Throws std::runtime_error on malformed input.
SampledFunction sampled_function_from_csv(const std::string& text);
SampledFunction read_sampled_function(const std::filesystem::path& path);

/// JSON envelope {grid:{x_min,x_max,n_points}, values:[[re,im],...]}.
nlohmann::json to_json(const SampledFunction& f);
SampledFunction sampled_function_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ConditionReport& r);
nlohmann::json to_json(const EecResidual& r);
nlohmann::json to_json(const Multipliers& m);
nlohmann::json to_json(const StabilityVerdict& v);
nlohmann::json to_json(const QuantizationEntry& e);
nlohmann::json to_json(const VariationalResult& r);

std::string format_double(double v);

}  // namespace oscstab::io
