#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "wavelab/metric.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

inline constexpr int config_schema_version = 1;
inline constexpr const char* code_version = "0.1.0";

const std::vector<std::string>& experiment_names();

// Every key a config for this experiment may carry, with its default.
nlohmann::json default_config(const std::string& experiment);

struct ExperimentConfig {
    std::string experiment;
    nlohmann::json resolved; // defaults merged with the document and overrides
};

struct ValidationResult {
    std::optional<ExperimentConfig> config;
    std::vector<std::string> errors; // "path: message", all of them
    bool ok() const { return errors.empty(); }
};

// Parses the document, applies "dotted.key=value" overrides, fills defaults
// and checks every field. A nonempty experiment overrides the document's.
ValidationResult validate(const std::string& text, const std::vector<std::string>& overrides = {},
                          const std::string& experiment = "");
// Same, throwing ValidationError with one line per problem.
ExperimentConfig validate_or_throw(const std::string& text, const std::vector<std::string>& overrides = {},
                                   const std::string& experiment = "");

Metric build_metric(const nlohmann::json& resolved);
Grid build_grid(const nlohmann::json& resolved);

struct Artifact {
    std::string path; // relative to the run directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::string experiment;
    std::string config_hash;
    std::string code_version;
    std::string started;
    std::string finished;
    std::vector<Artifact> artifacts;
};

// Runs the experiment into out_dir, emits plot data and writes manifest.json
// last. Library errors are rethrown with the failing phase prefixed.
RunManifest run(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Normalized plot CSVs under run_dir/plot; returns their paths relative to
// run_dir. Throws ValidationError listing any missing input files.
std::vector<std::string> emit_plot_data(const std::filesystem::path& run_dir);

std::string sha256_hex(const std::string& bytes);
std::string manifest_json(const RunManifest& manifest);

} // namespace wavelab
