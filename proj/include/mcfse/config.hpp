#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mcfse/errors.hpp"
#include "mcfse/montecarlo.hpp"

namespace mcfse {

/// Malformed configuration text, unknown keys or wrongly typed values. The
/// message names the offending field path or line.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

std::string_view artifact_version();

/// Reference parameter set with eta = 1, the linear FSE and A = 1e4.
ExperimentConfig default_config();

/// Configuration file layout:
///
///   {
///     "channel":    {"diffusion", "distance", "rx_radius", "flow_parallel",
///                    "flow_perpendicular", "eta", "samples_per_symbol",
///                    "memory", "beta", "frame_length"},
///     "receiver":   {"half_window", "ff_lookahead", "fb_taps", "lambda",
///                    "threshold"},
///     "experiment": {"schemes": [...], "A": [...] or "LIST|RANGE",
///                    "bits", "seed", "workers"}
///   }
///
/// Every key is optional; missing keys keep the value from `base`. A
/// top-level "manifest" object (as written by to_manifest_json) is ignored.
ExperimentConfig config_from_json(const nlohmann::json& doc, const ExperimentConfig& base);
ExperimentConfig config_from_text(std::string_view text, const ExperimentConfig& base);
ExperimentConfig load_config_file(const std::string& path, const ExperimentConfig& base);

/// All fields materialized.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// "a,b,c" or "start:step:stop" (inclusive of stop up to rounding).
std::vector<double> parse_a_values(std::string_view text);

/// "name[,name...]"; "all" selects every scheme.
std::vector<Scheme> parse_scheme_list(std::string_view text);

struct RunManifest {
  std::string version;
  std::string timestamp;  // UTC, ISO 8601
  std::uint64_t seed = 0;
  ExperimentConfig config;
};

RunManifest make_manifest(const ExperimentConfig& config);

/// The resolved config plus a "manifest" block; loadable as a config file.
nlohmann::json to_manifest_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& doc);

}  // namespace mcfse
