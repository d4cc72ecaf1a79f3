#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "renorm/symbols.hpp"

namespace renorm::wb {

// Rejected run configuration: unknown verb, missing or ill-typed keys,
// values outside the documented ranges.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// One artifact the run wants written under the output directory.
struct OutputFile {
  std::string name;
  std::string content;
};

// Everything a verb produces. `failure` set means the run completed and
// wrote its outputs but a declared numeric or structural check did not
// hold; the caller maps that to a distinct exit status.
struct RunResult {
  nlohmann::json summary;
  std::vector<std::string> lines;
  std::vector<OutputFile> files;
  std::optional<std::string> failure;
};

// Fills defaults, checks types and ranges, resolves alpha0 from kappa.
// The returned object is complete: running it again reproduces the run.
nlohmann::json normalize_config(const nlohmann::json& cfg);

// Degree parameters from the config keys d, alpha0 | kappa, kernel_gain,
// xidot_mode, theta. kappa stands for alpha0 = -d/2 - kappa; giving both
// keys is an error.
sym::DegreeParams params_from_config(const nlohmann::json& cfg);

// FNV-1a 64 over the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& cfg);

// Header plus data rows, comma-separated, every row the same width,
// every data cell numeric. Empty or ragged tables are invalid.
bool csv_valid(const std::string& text);

// Run manifest: normalized config, its hash, the seed, format versions,
// and the list of files the run wrote. Feeding the manifest back in as a
// config reproduces the outputs bit for bit.
nlohmann::json manifest_for(const nlohmann::json& normalized_cfg,
                            const std::vector<OutputFile>& files);

// Dispatch on cfg["verb"]: symbols, graph, renorm, scales, kernels,
// model, plan. Pure apart from RNG seeded from the config.
RunResult run_verb(const nlohmann::json& cfg);

}  // namespace renorm::wb
