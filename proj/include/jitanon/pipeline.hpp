#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "jitanon/corpus.hpp"
#include "jitanon/paramgen.hpp"
#include "jitanon/privacy.hpp"
#include "jitanon/utility_eval.hpp"

namespace jitanon {

/// IPR thresholds used to grade anonymization strength.
inline constexpr double kPrivacyLevel1Ipr = 65.0;
inline constexpr double kPrivacyLevel2Ipr = 80.0;

/// 2 when ipr >= 80, 1 when >= 65, else 0.
int privacy_level(double ipr_percent);

/// Everything one pipeline run needs, loadable from a single JSON file with
/// CLI overrides on top. Env vars are used only for the API key.
struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path out_dir = "out";
    ColumnMapping mapping;
    int n_bins = 20;
    AttackerConfig attacker;
    RFHyperparams forest{.n_trees = 200};  // desk-scale default; full studies use 1400
    UtilityProtocol utility;
    ParamPolicy policy = ParamPolicy::fallback_only;
    ModelEndpointConfig endpoint;
    int min_cluster_size_for_model = 5;
    std::uint64_t seed = 42;
};

/// Parses a config JSON object. Unknown keys and type mismatches throw
/// ConfigError, so typos cannot silently fall back to defaults.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Writes content to path via temp file + rename; no artifact is ever
/// half-written.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);
void atomic_write_json(const std::filesystem::path& path, const nlohmann::json& j);

struct PipelineResult {
    PrivacyReport privacy;
    UtilityReport utility_original;
    UtilityReport utility_anonymized;
    int model_count = 0;
    int fallback_count = 0;
    int cluster_count = 0;
};

/// The full batch: bin, summarize, generate parameters, regenerate la/ld,
/// score privacy and utility, and write every artifact (anonymized.csv plus
/// its sidecar, clusters.json, params.json, privacy_report.json,
/// utility_original.json, utility_anonymized.json, summary.csv/.json).
PipelineResult run_pipeline(const RunConfig& config);

/// Summary rows {approach, mean_f1_percent, ipr_percent, privacy_level}.
/// The original corpus scores IPR 0 by definition (the attacker queries the
/// unperturbed data).
nlohmann::json report_summary(const PrivacyReport& privacy, const UtilityReport& utility_orig,
                              const UtilityReport& utility_anon, std::uint64_t seed);
std::string summary_to_csv(const nlohmann::json& summary);

}  // namespace jitanon
