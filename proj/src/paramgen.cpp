#include "jitanon/paramgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "jitanon/errors.hpp"
#include "jitanon/model_client.hpp"

namespace jitanon {
namespace {

constexpr double kWeightSumTolerance = 1e-6;
constexpr double kBetaClampLo = 0.5;
constexpr double kBetaClampHi = 100.0;

const nlohmann::json* find_field(const nlohmann::json& obj, const char* name,
                                 const std::string& path) {
    auto it = obj.find(name);
    if (it == obj.end()) throw SchemaViolation(path, "missing field");
    return &*it;
}

double require_number(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaViolation(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaViolation(path, "not finite");
    return d;
}

std::int64_t require_nonneg_int(const nlohmann::json& v, const std::string& path) {
    const double d = require_number(v, path);
    if (std::floor(d) != d) throw SchemaViolation(path, "expected an integer");
    if (d < 0) throw SchemaViolation(path, "must be >= 0");
    return static_cast<std::int64_t>(d);
}

}  // namespace

std::string_view provenance_name(Provenance p) {
    return p == Provenance::model ? "model" : "fallback";
}

std::optional<ParamPolicy> parse_policy(std::string_view name) {
    if (name == "fallback-only") return ParamPolicy::fallback_only;
    if (name == "model") return ParamPolicy::model_with_fallback;
    if (name == "model-required") return ParamPolicy::model_required;
    return std::nullopt;
}

std::string_view policy_name(ParamPolicy policy) {
    switch (policy) {
        case ParamPolicy::fallback_only: return "fallback-only";
        case ParamPolicy::model_with_fallback: return "model";
        case ParamPolicy::model_required: return "model-required";
    }
    return "fallback-only";
}

Prompt build_prompt(const ClusterStats& stats) {
    Prompt p;
    p.system_message =
        "You are a statistical anonymization engine for commit-level software metrics. "
        "Reply with exactly one JSON object and nothing else: no prose, no markdown, no code "
        "fences. The object must follow this schema:\n"
        "{\"cluster_id\": string, "
        "\"churn_mixture\": {\"components\": [{\"weight\": number, \"mean\": number, "
        "\"std\": number}], \"min\": integer, \"max\": integer}, "
        "\"ratio_beta\": {\"alpha\": number, \"beta\": number}, "
        "\"constraints\": {\"non_negative\": true, \"la_plus_ld_equals_churn\": true}}\n"
        "Rules: churn_mixture uses one to three Gaussian components; the weights sum to 1; "
        "every std is positive; 0 <= min <= max are churn line bounds; alpha and beta are "
        "positive so the ratio distribution stays inside [0,1]; cluster_id repeats the id "
        "from the user message; regenerated values are non-negative integers obeying "
        "la + ld = churn. Pick parameters so sampled churn and ratio values match the "
        "cluster's statistics without allowing any individual record to be reconstructed.";

    p.user_message =
        "Cluster statistics: " + cluster_stats_to_json(stats).dump() +
        "\nField guide: la = lines added, ld = lines deleted, churn = la + ld, "
        "ratio = la / churn; quantile keys are min/p5/p25/p50/p75/p95/max; the cluster id is "
        "<QID>|<bin_index>, and (bin_left, bin_right] is the primary QID interval (null for "
        "the -1 bin).\nReturn the JSON parameter object for cluster " +
        stats.cluster_id + ".";
    return p;
}

std::string extract_json_object(const std::string& text) {
    const auto start = text.find('{');
    if (start == std::string::npos) throw MalformedResponse("no JSON object in response");
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return text.substr(start, i - start + 1);
        }
    }
    throw MalformedResponse("unbalanced JSON object in response");
}

AnonymizationParams validate_params(const std::string& raw_json,
                                    const std::string& expected_cluster_id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw_json);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaViolation("$", std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaViolation("$", "expected a JSON object");

    AnonymizationParams params;
    params.provenance = Provenance::model;

    const auto* cid = find_field(j, "cluster_id", "cluster_id");
    if (!cid->is_string()) throw SchemaViolation("cluster_id", "expected a string");
    params.cluster_id = cid->get<std::string>();

    const auto* mixture = find_field(j, "churn_mixture", "churn_mixture");
    if (!mixture->is_object()) throw SchemaViolation("churn_mixture", "expected an object");
    const auto* components = find_field(*mixture, "components", "churn_mixture.components");
    if (!components->is_array()) {
        throw SchemaViolation("churn_mixture.components", "expected an array");
    }
    if (components->empty() || components->size() > 3) {
        throw SchemaViolation("churn_mixture", "expected 1 to 3 components");
    }
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < components->size(); ++i) {
        const std::string base = "churn_mixture.components[" + std::to_string(i) + "]";
        const auto& c = (*components)[i];
        if (!c.is_object()) throw SchemaViolation(base, "expected an object");
        MixtureComponent mc;
        mc.weight = require_number(*find_field(c, "weight", base + ".weight"), base + ".weight");
        if (mc.weight <= 0.0 || mc.weight > 1.0) {
            throw SchemaViolation(base + ".weight", "must be in (0,1]");
        }
        mc.mean = require_number(*find_field(c, "mean", base + ".mean"), base + ".mean");
        mc.std_dev = require_number(*find_field(c, "std", base + ".std"), base + ".std");
        if (mc.std_dev <= 0.0) throw SchemaViolation(base + ".std", "must be > 0");
        weight_sum += mc.weight;
        params.churn_mixture.components.push_back(mc);
    }
    params.churn_mixture.min_churn =
        require_nonneg_int(*find_field(*mixture, "min", "churn_mixture.min"), "churn_mixture.min");
    params.churn_mixture.max_churn =
        require_nonneg_int(*find_field(*mixture, "max", "churn_mixture.max"), "churn_mixture.max");
    if (params.churn_mixture.min_churn > params.churn_mixture.max_churn) {
        throw SchemaViolation("churn_mixture.min", "min exceeds max");
    }

    const auto* beta = find_field(j, "ratio_beta", "ratio_beta");
    if (!beta->is_object()) throw SchemaViolation("ratio_beta", "expected an object");
    params.ratio_beta.alpha =
        require_number(*find_field(*beta, "alpha", "ratio_beta.alpha"), "ratio_beta.alpha");
    params.ratio_beta.beta =
        require_number(*find_field(*beta, "beta", "ratio_beta.beta"), "ratio_beta.beta");
    if (params.ratio_beta.alpha <= 0.0) throw SchemaViolation("ratio_beta.alpha", "must be > 0");
    if (params.ratio_beta.beta <= 0.0) throw SchemaViolation("ratio_beta.beta", "must be > 0");

    const auto* constraints = find_field(j, "constraints", "constraints");
    if (!constraints->is_object()) throw SchemaViolation("constraints", "expected an object");
    const auto* nn = find_field(*constraints, "non_negative", "constraints.non_negative");
    if (!nn->is_boolean() || !nn->get<bool>()) {
        throw SchemaViolation("constraints.non_negative", "must be true");
    }
    const auto* identity = find_field(*constraints, "la_plus_ld_equals_churn",
                                      "constraints.la_plus_ld_equals_churn");
    if (!identity->is_boolean() || !identity->get<bool>()) {
        throw SchemaViolation("constraints.la_plus_ld_equals_churn", "must be true");
    }

    if (std::abs(weight_sum - 1.0) > kWeightSumTolerance) throw WeightSumError(weight_sum);
    if (params.cluster_id != expected_cluster_id) {
        throw ClusterIdMismatch(expected_cluster_id, params.cluster_id);
    }
    return params;
}

AnonymizationParams fallback_params(const ClusterStats& stats) {
    AnonymizationParams params;
    params.cluster_id = stats.cluster_id;
    params.provenance = Provenance::fallback;

    MixtureComponent component;
    component.weight = 1.0;
    component.mean = stats.churn.p50;
    component.std_dev = std::max((stats.churn.p75 - stats.churn.p25) / 1.349, 1.0);
    params.churn_mixture.components = {component};
    params.churn_mixture.min_churn = static_cast<std::int64_t>(std::llround(stats.churn.min));
    params.churn_mixture.max_churn = static_cast<std::int64_t>(std::llround(stats.churn.max));

    // Method of moments on (median, IQR-based sigma); a zero-spread cluster
    // degenerates to the concentration clamp.
    const double m = std::clamp(stats.ratio.p50, 0.0, 1.0);
    const double sigma = (stats.ratio.p75 - stats.ratio.p25) / 1.349;
    const double variance = sigma * sigma;
    double alpha, beta;
    if (variance < 1e-9) {
        alpha = m * 2.0 * kBetaClampHi;
        beta = (1.0 - m) * 2.0 * kBetaClampHi;
    } else {
        const double t = m * (1.0 - m) / variance - 1.0;
        alpha = m * t;
        beta = (1.0 - m) * t;
    }
    params.ratio_beta.alpha = std::clamp(alpha, kBetaClampLo, kBetaClampHi);
    params.ratio_beta.beta = std::clamp(beta, kBetaClampLo, kBetaClampHi);
    return params;
}

nlohmann::json params_to_json(const AnonymizationParams& params) {
    nlohmann::json components = nlohmann::json::array();
    for (const auto& c : params.churn_mixture.components) {
        components.push_back({{"weight", c.weight}, {"mean", c.mean}, {"std", c.std_dev}});
    }
    return nlohmann::json{
        {"cluster_id", params.cluster_id},
        {"churn_mixture",
         {{"components", components},
          {"min", params.churn_mixture.min_churn},
          {"max", params.churn_mixture.max_churn}}},
        {"ratio_beta", {{"alpha", params.ratio_beta.alpha}, {"beta", params.ratio_beta.beta}}},
        {"constraints",
         {{"non_negative", params.non_negative},
          {"la_plus_ld_equals_churn", params.la_plus_ld_equals_churn}}},
    };
}

ParamGenResult generate_all_params(const std::map<std::string, ClusterStats>& stats_map,
                                   const ModelEndpointConfig& endpoint, ParamPolicy policy,
                                   int min_cluster_size_for_model) {
    ParamGenResult result;

    std::vector<const ClusterStats*> model_targets;
    for (const auto& [label, stats] : stats_map) {
        const bool too_small = stats.count < min_cluster_size_for_model;
        if (policy == ParamPolicy::fallback_only || too_small) {
            result.params.emplace(label, fallback_params(stats));
            ++result.fallback_count;
        } else {
            model_targets.push_back(&stats);
        }
    }
    if (model_targets.empty()) return result;

    ModelClient client(endpoint);
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= model_targets.size()) return;
            const ClusterStats& stats = *model_targets[i];
            try {
                const std::string raw = client.request_params(build_prompt(stats), stats.cluster_id);
                AnonymizationParams params = validate_params(raw, stats.cluster_id);
                std::lock_guard lock(mu);
                result.params.emplace(stats.cluster_id, std::move(params));
                ++result.model_count;
            } catch (const Error& e) {
                std::lock_guard lock(mu);
                if (policy == ParamPolicy::model_required) {
                    if (!fatal) fatal = std::current_exception();
                    return;
                }
                result.failures.emplace(stats.cluster_id, e.what());
                result.params.emplace(stats.cluster_id, fallback_params(stats));
                ++result.fallback_count;
            }
        }
    };

    const std::size_t n_workers =
        std::min<std::size_t>(std::max(endpoint.max_in_flight, 1), model_targets.size());
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (fatal) std::rethrow_exception(fatal);
    return result;
}

}  // namespace jitanon
