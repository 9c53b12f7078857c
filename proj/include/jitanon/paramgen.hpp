#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "jitanon/cluster_stats.hpp"

namespace jitanon {

struct MixtureComponent {
    double weight = 1.0;  // in (0,1]
    double mean = 0.0;    // churn lines
    double std_dev = 1.0; // > 0
};

struct ChurnMixture {
    std::vector<MixtureComponent> components;  // 1..3, weights summing to 1
    std::int64_t min_churn = 0;
    std::int64_t max_churn = 0;
};

struct RatioBeta {
    double alpha = 1.0;  // > 0
    double beta = 1.0;   // > 0
};

enum class Provenance { model, fallback };

std::string_view provenance_name(Provenance p);

/// Validated per-cluster sampling parameters. The constraints flags are part
/// of the wire schema and must both be true.
struct AnonymizationParams {
    std::string cluster_id;
    ChurnMixture churn_mixture;
    RatioBeta ratio_beta;
    bool non_negative = true;
    bool la_plus_ld_equals_churn = true;
    Provenance provenance = Provenance::fallback;
};

struct ModelEndpointConfig {
    std::string base_url;    // full URL of the chat completions endpoint
    std::string model_name;
    double temperature = 0.0;  // deterministic decoding for reproduction runs
    double top_p = 0.0;
    int max_retries = 3;
    std::chrono::seconds timeout{30};
    int max_in_flight = 4;
    std::string api_key_env = "JITANON_API_KEY";
    std::optional<std::filesystem::path> audit_dir;
};

struct Prompt {
    std::string system_message;
    std::string user_message;
};

enum class ParamPolicy { fallback_only, model_with_fallback, model_required };

std::optional<ParamPolicy> parse_policy(std::string_view name);
std::string_view policy_name(ParamPolicy policy);

/// System + user message for one cluster. Pure: identical stats give
/// identical bytes.
Prompt build_prompt(const ClusterStats& stats);

/// Takes the first balanced top-level JSON object out of free-form model
/// text (reasoning models like to wrap it in prose). Throws
/// MalformedResponse when there is none.
std::string extract_json_object(const std::string& text);

/// Strict schema check of a raw parameter object. Invalid input is rejected,
/// never repaired. Throws SchemaViolation / WeightSumError /
/// ClusterIdMismatch.
AnonymizationParams validate_params(const std::string& raw_json, const std::string& expected_cluster_id);

/// Deterministic local substitute: one Gaussian at the churn median with
/// sigma = max(IQR/1.349, 1), bounds = observed churn min/max, and a
/// moment-matched Beta for the ratio (alpha/beta clamped to [0.5, 100]).
AnonymizationParams fallback_params(const ClusterStats& stats);

/// Wire format (also used in prompts and fixtures):
/// { cluster_id, churn_mixture: {components: [{weight, mean, std}], min, max},
///   ratio_beta: {alpha, beta},
///   constraints: {non_negative, la_plus_ld_equals_churn} }
nlohmann::json params_to_json(const AnonymizationParams& params);

struct ParamGenResult {
    std::map<std::string, AnonymizationParams> params;
    int model_count = 0;
    int fallback_count = 0;
    /// cluster -> why the model path was not used (empty when all succeeded)
    std::map<std::string, std::string> failures;
};

/// Obtains parameters for every cluster under the given policy. Clusters
/// smaller than min_cluster_size_for_model never trigger a model call.
/// Under model_required, endpoint exhaustion is rethrown instead of falling
/// back.
ParamGenResult generate_all_params(const std::map<std::string, ClusterStats>& stats_map,
                                   const ModelEndpointConfig& endpoint, ParamPolicy policy,
                                   int min_cluster_size_for_model = 5);

}  // namespace jitanon
