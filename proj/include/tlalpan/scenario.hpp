#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace tlalpan::scenario {

enum class ExperimentKind {
    MoshinskyFringes,
    CavityEcho,
    CoupledSlit,
    ChiSweep,
    AblCheck,
};

ExperimentKind kind_from_string(const std::string& s);
std::string to_string(ExperimentKind k);

struct Violation {
    std::string field;
    std::string message;
    bool warning = false;  // warnings do not block a run
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::ChiSweep;
    std::uint64_t seed = 0;
    nlohmann::json raw;

    static ExperimentConfig from_file(const std::filesystem::path& p);
    static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Pure schema check: required keys, types, ranges, and unknown-key
/// detection (unknown keys are errors, not warnings). Never mutates.
std::vector<Violation> validate(const ExperimentConfig& cfg);

struct ManifestEntry {
    std::string name;      // file name inside the output directory
    std::string digest;    // fnv1a-64 of the file bytes, hex
    std::uint64_t bytes = 0;
};

struct RunManifest {
    std::string kind;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> files;
    nlohmann::json summary;

    nlohmann::json to_json() const;
};

enum class TableFormat { Csv, Json };

/**
 * Executes the configured experiment, writing per-kind artifacts plus
 * manifest.json into out_dir. Refuses configs that validate() rejects.
 * Identical config and seed produce byte-identical artifacts and digests.
 */
RunManifest run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                           TableFormat format = TableFormat::Csv);

/// Batch-level chi-sweep artifacts (per-chi screen histograms) instead of
/// the visibility curve; shares the chi-sweep config schema.
RunManifest run_doubleslit_batches(const ExperimentConfig& cfg,
                                   const std::filesystem::path& out_dir,
                                   TableFormat format = TableFormat::Csv);

/// Fits the scaling laws to a sweep CSV (columns chi, visibility, O, tau_rc)
/// and writes fit.json. Returns the manifest.
RunManifest run_fit(const std::filesystem::path& sweep_csv, const std::filesystem::path& out_dir,
                    int bootstrap_resamples, std::uint64_t seed);

/// Converts result tables found in a results directory into gnuplot-ready
/// whitespace-separated files in out_dir. Throws listing missing inputs if
/// nothing convertible is found.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& results_dir,
                                                  const std::filesystem::path& out_dir);

}  // namespace tlalpan::scenario
