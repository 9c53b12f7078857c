#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "jitanon/binning.hpp"
#include "jitanon/cluster_stats.hpp"
#include "jitanon/corpus.hpp"
#include "jitanon/errors.hpp"
#include "jitanon/paramgen.hpp"
#include "jitanon/pipeline.hpp"
#include "jitanon/privacy.hpp"
#include "jitanon/regen.hpp"
#include "jitanon/utility_eval.hpp"
#include "jitanon/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitEndpoint = 3;

struct CommonFlags {
    std::string config_path;
    std::string input;
    std::string out;
    std::string policy;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--input", input, "input corpus CSV (overrides config)");
        cmd->add_option("--out", out, "output directory (overrides config)");
        cmd->add_option("--policy", policy,
                        "parameter policy: fallback-only | model | model-required");
        seed_opt = cmd->add_option("--seed", seed, "master seed (overrides config)");
    }

    jitanon::RunConfig resolve() const {
        jitanon::RunConfig config;
        if (!config_path.empty()) config = jitanon::load_run_config(config_path);
        if (!input.empty()) config.input = input;
        if (!out.empty()) config.out_dir = out;
        if (seed_opt != nullptr && seed_opt->count() > 0) config.seed = seed;
        if (!policy.empty()) {
            const auto parsed = jitanon::parse_policy(policy);
            if (!parsed) throw jitanon::ConfigError("unknown policy: " + policy);
            config.policy = *parsed;
        }
        return config;
    }
};

struct Prepared {
    jitanon::CommitCorpus corpus;
    jitanon::ClusterAssignment assignment;
};

Prepared prepare(const jitanon::RunConfig& config) {
    if (config.input.empty()) throw jitanon::ConfigError("no input corpus given");
    Prepared p;
    p.corpus = jitanon::derive_metrics(jitanon::load_corpus(config.input, config.mapping));
    p.assignment = jitanon::cluster_corpus(p.corpus, config.n_bins);
    return p;
}

void note(const std::filesystem::path& path) {
    std::cout << "wrote " << path.string() << "\n";
}

int run_bin(const jitanon::RunConfig& config) {
    const Prepared p = prepare(config);
    nlohmann::json j = jitanon::assignment_to_json(p.assignment);
    j["seed"] = config.seed;
    j["n_bins"] = config.n_bins;
    jitanon::atomic_write_json(config.out_dir / "clusters.json", j);
    note(config.out_dir / "clusters.json");
    return kExitOk;
}

int run_stats(const jitanon::RunConfig& config) {
    const Prepared p = prepare(config);
    const auto stats = jitanon::summarize_all(p.corpus, p.assignment);
    nlohmann::json clusters = nlohmann::json::object();
    for (const auto& [label, s] : stats) clusters[label] = jitanon::cluster_stats_to_json(s);
    jitanon::atomic_write_json(config.out_dir / "stats.json",
                               {{"clusters", clusters}, {"seed", config.seed}});
    note(config.out_dir / "stats.json");
    return kExitOk;
}

nlohmann::json params_manifest(const jitanon::ParamGenResult& gen,
                               const jitanon::RunConfig& config) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [label, p] : gen.params) {
        params[label] = {{"params", jitanon::params_to_json(p)},
                         {"provenance", std::string(jitanon::provenance_name(p.provenance))}};
    }
    return {{"params", params},
            {"model_count", gen.model_count},
            {"fallback_count", gen.fallback_count},
            {"failures", gen.failures},
            {"policy", std::string(jitanon::policy_name(config.policy))},
            {"seed", config.seed}};
}

int run_params(const jitanon::RunConfig& config) {
    const Prepared p = prepare(config);
    const auto stats = jitanon::summarize_all(p.corpus, p.assignment);
    const auto gen = jitanon::generate_all_params(stats, config.endpoint, config.policy,
                                                  config.min_cluster_size_for_model);
    jitanon::atomic_write_json(config.out_dir / "params.json", params_manifest(gen, config));
    note(config.out_dir / "params.json");
    return kExitOk;
}

int run_anonymize(const jitanon::RunConfig& config) {
    const Prepared p = prepare(config);
    const auto stats = jitanon::summarize_all(p.corpus, p.assignment);
    const auto gen = jitanon::generate_all_params(stats, config.endpoint, config.policy,
                                                  config.min_cluster_size_for_model);
    const auto anonymized = jitanon::anonymize_corpus(p.corpus, p.assignment, gen.params);
    jitanon::atomic_write_json(config.out_dir / "params.json", params_manifest(gen, config));
    jitanon::atomic_write_file(config.out_dir / "anonymized.csv",
                               jitanon::corpus_to_csv(anonymized, config.mapping));
    note(config.out_dir / "params.json");
    note(config.out_dir / "anonymized.csv");
    return kExitOk;
}

int run_privacy(const jitanon::RunConfig& config, const std::string& anonymized_path) {
    const Prepared p = prepare(config);
    jitanon::CommitCorpus anonymized;
    if (!anonymized_path.empty()) {
        anonymized = jitanon::derive_metrics(jitanon::load_corpus(anonymized_path, config.mapping));
    } else {
        const auto stats = jitanon::summarize_all(p.corpus, p.assignment);
        const auto gen = jitanon::generate_all_params(stats, config.endpoint, config.policy,
                                                      config.min_cluster_size_for_model);
        anonymized = jitanon::anonymize_corpus(p.corpus, p.assignment, gen.params);
    }
    const auto report = jitanon::compute_ipr(p.corpus, anonymized, config.attacker);
    nlohmann::json j = jitanon::privacy_report_to_json(report, config.attacker);
    j["seed"] = config.seed;
    j["privacy_level"] = jitanon::privacy_level(report.ipr_percent);
    jitanon::atomic_write_json(config.out_dir / "privacy_report.json", j);
    note(config.out_dir / "privacy_report.json");
    std::cout << "IPR " << report.ipr_percent << "% (level "
              << jitanon::privacy_level(report.ipr_percent) << ")\n";
    return kExitOk;
}

int run_utility(const jitanon::RunConfig& config) {
    if (config.input.empty()) throw jitanon::ConfigError("no input corpus given");
    const auto corpus = jitanon::derive_metrics(jitanon::load_corpus(config.input, config.mapping));
    const auto report =
        jitanon::run_utility_experiment(corpus, config.forest, config.seed, config.utility);
    nlohmann::json j = jitanon::utility_report_to_json(report);
    j["seed"] = config.seed;
    jitanon::atomic_write_json(config.out_dir / "utility.json", j);
    note(config.out_dir / "utility.json");
    std::cout << "mean F1 " << report.mean_f1 << "\n";
    return kExitOk;
}

int run_full(const jitanon::RunConfig& config) {
    const auto result = jitanon::run_pipeline(config);
    std::cout << "clusters: " << result.cluster_count << " (model " << result.model_count
              << ", fallback " << result.fallback_count << ")\n"
              << "IPR: " << result.privacy.ipr_percent << "% (level "
              << jitanon::privacy_level(result.privacy.ipr_percent) << ")\n"
              << "mean F1 original:   " << result.utility_original.mean_f1 << "\n"
              << "mean F1 anonymized: " << result.utility_anonymized.mean_f1 << "\n"
              << "artifacts in " << config.out_dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jitanon: cluster-guided anonymization of commit-level defect datasets"};
    app.set_version_flag("--version", std::string(jitanon::kVersion));
    app.require_subcommand(1);

    CommonFlags bin_flags, stats_flags, params_flags, anon_flags, privacy_flags, utility_flags,
        run_flags;
    std::string anonymized_path;

    auto* cmd_bin = app.add_subcommand("bin", "assign commits to QID-bin clusters");
    bin_flags.attach(cmd_bin);
    auto* cmd_stats = app.add_subcommand("stats", "per-cluster quantile summaries");
    stats_flags.attach(cmd_stats);
    auto* cmd_params = app.add_subcommand("params", "generate anonymization parameters");
    params_flags.attach(cmd_params);
    auto* cmd_anon = app.add_subcommand("anonymize", "regenerate la/ld for every commit");
    anon_flags.attach(cmd_anon);
    auto* cmd_privacy = app.add_subcommand("privacy", "score IPR against the original");
    privacy_flags.attach(cmd_privacy);
    cmd_privacy->add_option("--anonymized", anonymized_path,
                            "score this CSV instead of anonymizing in-process");
    auto* cmd_utility = app.add_subcommand("utility", "run the F1 utility protocol");
    utility_flags.attach(cmd_utility);
    auto* cmd_run = app.add_subcommand("run", "full pipeline with all artifacts");
    run_flags.attach(cmd_run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (cmd_bin->parsed()) return run_bin(bin_flags.resolve());
        if (cmd_stats->parsed()) return run_stats(stats_flags.resolve());
        if (cmd_params->parsed()) return run_params(params_flags.resolve());
        if (cmd_anon->parsed()) return run_anonymize(anon_flags.resolve());
        if (cmd_privacy->parsed()) return run_privacy(privacy_flags.resolve(), anonymized_path);
        if (cmd_utility->parsed()) return run_utility(utility_flags.resolve());
        if (cmd_run->parsed()) return run_full(run_flags.resolve());
    } catch (const jitanon::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const jitanon::EndpointUnreachable& e) {
        std::cerr << "endpoint exhausted: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const jitanon::Timeout& e) {
        std::cerr << "endpoint exhausted: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const jitanon::MalformedResponse& e) {
        std::cerr << "endpoint exhausted: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const jitanon::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
