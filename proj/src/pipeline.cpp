#include "jitanon/pipeline.hpp"

#include <fstream>
#include <set>

#include "jitanon/binning.hpp"
#include "jitanon/cluster_stats.hpp"
#include "jitanon/errors.hpp"
#include "jitanon/regen.hpp"
#include "jitanon/rng.hpp"
#include "jitanon/version.hpp"

namespace jitanon {
namespace {

void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown config key: " + where + key);
        }
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("bad value for config key: " + where + key);
    }
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace

int privacy_level(double ipr_percent) {
    if (ipr_percent >= kPrivacyLevel2Ipr) return 2;
    if (ipr_percent >= kPrivacyLevel1Ipr) return 1;
    return 0;
}

RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    require_keys(j,
                 {"input", "out", "seed", "n_bins", "policy", "column_mapping", "delimiter",
                  "attacker", "forest", "utility", "endpoint", "min_cluster_size_for_model"},
                 "");

    RunConfig config;
    config.input = get_or<std::string>(j, "input", "", "");
    config.out_dir = get_or<std::string>(j, "out", config.out_dir.string(), "");
    config.seed = get_or<std::uint64_t>(j, "seed", config.seed, "");
    config.n_bins = get_or<int>(j, "n_bins", config.n_bins, "");
    config.min_cluster_size_for_model =
        get_or<int>(j, "min_cluster_size_for_model", config.min_cluster_size_for_model, "");

    if (j.contains("policy")) {
        const auto name = get_or<std::string>(j, "policy", "", "");
        const auto policy = parse_policy(name);
        if (!policy) throw ConfigError("unknown policy: " + name);
        config.policy = *policy;
    }
    if (j.contains("column_mapping")) {
        const auto& m = j.at("column_mapping");
        if (!m.is_object()) throw ConfigError("column_mapping must be an object");
        const auto known = logical_column_names();
        for (const auto& [logical, actual] : m.items()) {
            if (std::find(known.begin(), known.end(), logical) == known.end()) {
                throw ConfigError("column_mapping: unknown logical column: " + logical);
            }
            if (!actual.is_string()) throw ConfigError("column_mapping values must be strings");
            config.mapping.columns[logical] = actual.get<std::string>();
        }
    }
    if (j.contains("delimiter")) {
        const auto d = get_or<std::string>(j, "delimiter", ",", "");
        if (d.size() != 1) throw ConfigError("delimiter must be a single character");
        config.mapping.delimiter = d[0];
    }
    if (j.contains("attacker")) {
        const auto& a = j.at("attacker");
        if (!a.is_object()) throw ConfigError("attacker must be an object");
        require_keys(a, {"qid_bins", "sensitive_bins", "query_qid_count"}, "attacker.");
        config.attacker.qid_bins = get_or<int>(a, "qid_bins", 10, "attacker.");
        config.attacker.sensitive_bins = get_or<int>(a, "sensitive_bins", 10, "attacker.");
        config.attacker.query_qid_count = get_or<int>(a, "query_qid_count", -1, "attacker.");
    }
    if (j.contains("forest")) {
        const auto& f = j.at("forest");
        if (!f.is_object()) throw ConfigError("forest must be an object");
        require_keys(f, {"n_trees", "max_depth", "max_features_per_split", "bootstrap"},
                     "forest.");
        config.forest.n_trees = get_or<int>(f, "n_trees", config.forest.n_trees, "forest.");
        config.forest.max_depth = get_or<int>(f, "max_depth", config.forest.max_depth, "forest.");
        config.forest.max_features_per_split =
            get_or<int>(f, "max_features_per_split", config.forest.max_features_per_split,
                        "forest.");
        config.forest.bootstrap = get_or<bool>(f, "bootstrap", true, "forest.");
        if (config.forest.n_trees < 1) throw ConfigError("forest.n_trees must be >= 1");
        if (config.forest.max_features_per_split < 1) {
            throw ConfigError("forest.max_features_per_split must be >= 1");
        }
    }
    if (j.contains("utility")) {
        const auto& u = j.at("utility");
        if (!u.is_object()) throw ConfigError("utility must be an object");
        require_keys(u, {"n_runs", "sample_size", "train_fraction", "k_smote", "k_enn", "features"},
                     "utility.");
        config.utility.n_runs = get_or<int>(u, "n_runs", 5, "utility.");
        config.utility.sample_size = get_or<int>(u, "sample_size", 500, "utility.");
        config.utility.train_fraction = get_or<double>(u, "train_fraction", 0.8, "utility.");
        config.utility.k_smote = get_or<int>(u, "k_smote", 5, "utility.");
        config.utility.k_enn = get_or<int>(u, "k_enn", 3, "utility.");
        config.utility.feature_names = get_or<std::vector<std::string>>(
            u, "features", default_feature_names(), "utility.");
        if (config.utility.n_runs < 1 || config.utility.sample_size < 1) {
            throw ConfigError("utility.n_runs and utility.sample_size must be >= 1");
        }
        if (!(config.utility.train_fraction > 0.0 && config.utility.train_fraction < 1.0)) {
            throw ConfigError("utility.train_fraction must be in (0,1)");
        }
    }
    if (j.contains("endpoint")) {
        const auto& e = j.at("endpoint");
        if (!e.is_object()) throw ConfigError("endpoint must be an object");
        require_keys(e,
                     {"base_url", "model", "temperature", "top_p", "max_retries",
                      "timeout_seconds", "max_in_flight", "api_key_env", "audit_dir"},
                     "endpoint.");
        config.endpoint.base_url = get_or<std::string>(e, "base_url", "", "endpoint.");
        config.endpoint.model_name = get_or<std::string>(e, "model", "", "endpoint.");
        config.endpoint.temperature = get_or<double>(e, "temperature", 0.0, "endpoint.");
        config.endpoint.top_p = get_or<double>(e, "top_p", 0.0, "endpoint.");
        config.endpoint.max_retries = get_or<int>(e, "max_retries", 3, "endpoint.");
        config.endpoint.timeout =
            std::chrono::seconds(get_or<int>(e, "timeout_seconds", 30, "endpoint."));
        config.endpoint.max_in_flight = get_or<int>(e, "max_in_flight", 4, "endpoint.");
        config.endpoint.api_key_env =
            get_or<std::string>(e, "api_key_env", "JITANON_API_KEY", "endpoint.");
        if (e.contains("audit_dir") && !e.at("audit_dir").is_null()) {
            config.endpoint.audit_dir = get_or<std::string>(e, "audit_dir", "", "endpoint.");
        }
    }
    if (config.n_bins < 2) throw ConfigError("n_bins must be >= 2");
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write: " + tmp);
        out << content;
        out.flush();
        if (!out) throw Error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void atomic_write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    atomic_write_file(path, j.dump(2) + "\n");
}

nlohmann::json report_summary(const PrivacyReport& privacy, const UtilityReport& utility_orig,
                              const UtilityReport& utility_anon, std::uint64_t seed) {
    nlohmann::json rows = nlohmann::json::array();
    rows.push_back({{"approach", "original"},
                    {"mean_f1_percent", utility_orig.mean_f1 * 100.0},
                    {"ipr_percent", 0.0},
                    {"privacy_level", privacy_level(0.0)}});
    rows.push_back({{"approach", "anonymized"},
                    {"mean_f1_percent", utility_anon.mean_f1 * 100.0},
                    {"ipr_percent", privacy.ipr_percent},
                    {"privacy_level", privacy_level(privacy.ipr_percent)}});
    return nlohmann::json{{"rows", rows}, {"seed", seed}};
}

std::string summary_to_csv(const nlohmann::json& summary) {
    std::string csv = "approach,mean_f1_percent,ipr_percent,privacy_level\n";
    for (const auto& row : summary.at("rows")) {
        csv += row.at("approach").get<std::string>();
        csv += ',';
        csv += nlohmann::json(row.at("mean_f1_percent")).dump();
        csv += ',';
        csv += nlohmann::json(row.at("ipr_percent")).dump();
        csv += ',';
        csv += std::to_string(row.at("privacy_level").get<int>());
        csv += '\n';
    }
    return csv;
}

PipelineResult run_pipeline(const RunConfig& config) {
    if (config.input.empty()) throw ConfigError("no input corpus given");

    const CommitCorpus original = derive_metrics(load_corpus(config.input, config.mapping));
    const ClusterAssignment assignment = cluster_corpus(original, config.n_bins);
    const auto stats = summarize_all(original, assignment);
    const ParamGenResult gen = generate_all_params(stats, config.endpoint, config.policy,
                                                   config.min_cluster_size_for_model);
    const CommitCorpus anonymized = anonymize_corpus(original, assignment, gen.params);

    const PrivacyReport privacy = compute_ipr(original, anonymized, config.attacker);

    RFHyperparams hp = config.forest;
    const UtilityReport utility_orig =
        run_utility_experiment(original, hp, config.seed, config.utility);
    const UtilityReport utility_anon =
        run_utility_experiment(anonymized, hp, config.seed, config.utility);

    const auto& out = config.out_dir;
    std::filesystem::create_directories(out);

    nlohmann::json clusters = assignment_to_json(assignment);
    clusters["seed"] = config.seed;
    clusters["n_bins"] = config.n_bins;
    atomic_write_json(out / "clusters.json", clusters);

    nlohmann::json stats_json = nlohmann::json::object();
    for (const auto& [label, s] : stats) stats_json[label] = cluster_stats_to_json(s);
    atomic_write_json(out / "stats.json", nlohmann::json{{"clusters", stats_json},
                                                         {"seed", config.seed}});

    nlohmann::json params_json = nlohmann::json::object();
    for (const auto& [label, p] : gen.params) {
        params_json[label] = {{"params", params_to_json(p)},
                              {"provenance", std::string(provenance_name(p.provenance))}};
    }
    const nlohmann::json manifest{{"params", params_json},
                                  {"model_count", gen.model_count},
                                  {"fallback_count", gen.fallback_count},
                                  {"failures", gen.failures},
                                  {"policy", std::string(policy_name(config.policy))},
                                  {"seed", config.seed}};
    const std::string manifest_text = manifest.dump(2) + "\n";
    atomic_write_file(out / "params.json", manifest_text);

    const std::string csv = corpus_to_csv(anonymized, config.mapping);
    atomic_write_file(out / "anonymized.csv", csv);
    atomic_write_json(out / "anonymized.meta.json",
                      nlohmann::json{{"params_manifest_fnv1a64", hex64(fnv1a64(manifest_text))},
                                     {"prng_algorithm", kPrngAlgorithmId},
                                     {"version", kVersion},
                                     {"seed", config.seed},
                                     {"n_bins", config.n_bins},
                                     {"policy", std::string(policy_name(config.policy))},
                                     {"input", config.input.string()}});

    nlohmann::json privacy_json = privacy_report_to_json(privacy, config.attacker);
    privacy_json["seed"] = config.seed;
    privacy_json["privacy_level"] = privacy_level(privacy.ipr_percent);
    atomic_write_json(out / "privacy_report.json", privacy_json);

    nlohmann::json uo = utility_report_to_json(utility_orig);
    uo["seed"] = config.seed;
    atomic_write_json(out / "utility_original.json", uo);
    nlohmann::json ua = utility_report_to_json(utility_anon);
    ua["seed"] = config.seed;
    atomic_write_json(out / "utility_anonymized.json", ua);

    const nlohmann::json summary = report_summary(privacy, utility_orig, utility_anon, config.seed);
    atomic_write_json(out / "summary.json", summary);
    atomic_write_file(out / "summary.csv", summary_to_csv(summary));

    PipelineResult result;
    result.privacy = privacy;
    result.utility_original = utility_orig;
    result.utility_anonymized = utility_anon;
    result.model_count = gen.model_count;
    result.fallback_count = gen.fallback_count;
    result.cluster_count = static_cast<int>(stats.size());
    return result;
}

}  // namespace jitanon
