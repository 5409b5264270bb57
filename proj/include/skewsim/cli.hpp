#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "skewsim/report.hpp"

namespace skewsim {

inline constexpr const char* version_string = "0.1.0";

struct ExperimentInfo {
    std::string name;
    std::vector<std::string> required;  // config sections that must be present
    std::string exercises;
};

/// The ten experiments in a fixed order.
const std::vector<ExperimentInfo>& list_experiments();

/// Known names closest to `name` by edit distance, best first.
std::vector<std::string> suggest_experiments(const std::string& name, std::size_t limit = 3);

/// Validated run configuration. `params` holds the experiment parameters
/// with every default filled in.
struct RunConfig {
    std::string experiment;
    Json spec;
    Json measure;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out = "out";
    Json domain;
    double x0 = 0.0;
    Json params;

    /// Resolved configuration without the output directory and thread count,
    /// which do not affect results.
    Json canonical() const;
};

/// JSON Schema (draft 2020-12) of the configuration file.
Json config_schema();

/// Validates against the schema rules (unknown keys rejected, types
/// checked, defaults filled). Throws ConfigError.
RunConfig parse_config(const Json& doc);

/// Applies "a.b.c=value" to doc. The value is parsed as JSON when possible
/// and kept as a string otherwise.
void apply_override(Json& doc, const std::string& assignment);

struct OutputFile {
    std::string name;
    std::string contents;
};

struct RunResult {
    ExperimentReport report{"none"};
    std::vector<OutputFile> files;  // CSV artifacts besides the report
};

/// Runs the configured experiment. Hypothesis violations of the inputs
/// (ConditionError) propagate; report-only checkers record them as metrics.
RunResult run_experiment(const RunConfig& config);

/// Writes report.json, refinement.csv, the artifacts and manifest.json.
void write_outputs(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir);

/// Exit status: 0 when the verdict passes, 2 otherwise.
inline int exit_status(const RunResult& result) { return result.report.verdict() ? 0 : 2; }

}  // namespace skewsim
