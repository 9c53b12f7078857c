#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "jitanon/corpus.hpp"
#include "jitanon/errors.hpp"
#include "jitanon/pipeline.hpp"
#include "jitanon/rng.hpp"

#include "support/helpers.hpp"

namespace {

nlohmann::json minimal_config(const std::filesystem::path& input,
                              const std::filesystem::path& out) {
    return nlohmann::json{
        {"input", input.string()},
        {"out", out.string()},
        {"seed", 42},
        {"n_bins", 5},
        {"policy", "fallback-only"},
        {"attacker", {{"qid_bins", 4}, {"sensitive_bins", 4}}},
        {"forest", {{"n_trees", 10}, {"max_depth", 6}}},
        {"utility", {{"n_runs", 1}, {"sample_size", 60}}},
    };
}

std::filesystem::path write_pipeline_corpus(const std::filesystem::path& dir, int n = 120) {
    jitanon::CommitCorpus corpus;
    jitanon::SplitMix64 stream(404);
    for (int i = 0; i < n; ++i) {
        auto rec = testsupport::make_record(
            "p" + std::to_string(i), 1000 + i,
            static_cast<std::int64_t>(1 + stream.next_uniform() * 200),
            static_cast<std::int64_t>(stream.next_uniform() * 120));
        for (std::size_t q = 0; q < jitanon::kQidCount; ++q) {
            rec.qids[q] = std::floor(stream.next_uniform() * 30.0);
        }
        rec.buggy = stream.next_uniform() < 0.4;
        corpus.records.push_back(rec);
    }
    corpus = jitanon::derive_metrics(std::move(corpus));
    const auto path = dir / "input.csv";
    jitanon::write_corpus_csv(corpus, path);
    return path;
}

}  // namespace

TEST_CASE("privacy_level: thresholds at 65 and 80") {
    CHECK(jitanon::privacy_level(100.0) == 2);
    CHECK(jitanon::privacy_level(90.2) == 2);
    CHECK(jitanon::privacy_level(80.0) == 2);
    CHECK(jitanon::privacy_level(79.999) == 1);
    CHECK(jitanon::privacy_level(65.0) == 1);
    CHECK(jitanon::privacy_level(64.9) == 0);
    CHECK(jitanon::privacy_level(0.0) == 0);
}

TEST_CASE("config_from_json: defaults survive an empty object") {
    const auto config = jitanon::config_from_json(nlohmann::json::object());
    CHECK(config.n_bins == 20);
    CHECK(config.seed == 42);
    CHECK(config.policy == jitanon::ParamPolicy::fallback_only);
    CHECK(config.forest.n_trees == 200);
    CHECK(config.forest.max_depth == 100);
    CHECK(config.utility.n_runs == 5);
    CHECK(config.utility.sample_size == 500);
    CHECK(config.utility.train_fraction == 0.8);
    CHECK(config.attacker.qid_bins == 10);
    CHECK(config.min_cluster_size_for_model == 5);
    CHECK(config.mapping.delimiter == ',');
}

TEST_CASE("config_from_json: full object round-trips") {
    const nlohmann::json j{
        {"input", "data.csv"},
        {"out", "results"},
        {"seed", 7},
        {"n_bins", 10},
        {"policy", "model"},
        {"delimiter", ";"},
        {"column_mapping", {{"timestamp", "author_date"}, {"aexp", "exp"}}},
        {"attacker", {{"qid_bins", 8}, {"sensitive_bins", 6}, {"query_qid_count", 3}}},
        {"forest",
         {{"n_trees", 50}, {"max_depth", 20}, {"max_features_per_split", 2}, {"bootstrap", true}}},
        {"utility",
         {{"n_runs", 2},
          {"sample_size", 100},
          {"train_fraction", 0.7},
          {"k_smote", 4},
          {"k_enn", 2},
          {"features", {"nf", "la"}}}},
        {"endpoint",
         {{"base_url", "http://localhost:8000/v1/chat/completions"},
          {"model", "m"},
          {"temperature", 0.0},
          {"max_retries", 2},
          {"timeout_seconds", 10}}},
        {"min_cluster_size_for_model", 8},
    };
    const auto config = jitanon::config_from_json(j);
    CHECK(config.input == "data.csv");
    CHECK(config.out_dir == "results");
    CHECK(config.seed == 7);
    CHECK(config.n_bins == 10);
    CHECK(config.policy == jitanon::ParamPolicy::model_with_fallback);
    CHECK(config.mapping.delimiter == ';');
    CHECK(config.mapping.actual("timestamp") == "author_date");
    CHECK(config.mapping.actual("aexp") == "exp");
    CHECK(config.mapping.actual("la") == "la");  // unmapped stays logical
    CHECK(config.attacker.query_qid_count == 3);
    CHECK(config.forest.n_trees == 50);
    CHECK(config.utility.feature_names == std::vector<std::string>{"nf", "la"});
    CHECK(config.endpoint.model_name == "m");
    CHECK(config.endpoint.timeout == std::chrono::seconds(10));
    CHECK(config.min_cluster_size_for_model == 8);
}

TEST_CASE("config_from_json: rejections") {
    using jitanon::config_from_json;
    using nlohmann::json;
    CHECK_THROWS_AS(config_from_json(json::array()), jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"typo_key", 1}}), jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"policy", "llm"}}), jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"delimiter", ";;"}}), jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"n_bins", 1}}), jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"column_mapping", {{"nope", "x"}}}}),
                    jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"forest", {{"n_trees", 0}}}}), jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"utility", {{"train_fraction", 1.0}}}}),
                    jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"utility", {{"unknown", 1}}}}), jitanon::ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"seed", "abc"}}), jitanon::ConfigError);
}

TEST_CASE("load_run_config: missing file and bad JSON") {
    const auto dir = testsupport::make_temp_dir("cfg");
    CHECK_THROWS_AS(jitanon::load_run_config(dir / "absent.json"), jitanon::ConfigError);
    testsupport::write_file(dir / "broken.json", "{ not json");
    CHECK_THROWS_AS(jitanon::load_run_config(dir / "broken.json"), jitanon::ConfigError);
    testsupport::write_file(dir / "ok.json", R"({"seed": 9})");
    CHECK(jitanon::load_run_config(dir / "ok.json").seed == 9);
    std::filesystem::remove_all(dir);
}

TEST_CASE("atomic_write_file: no temp residue, parents created, content exact") {
    const auto dir = testsupport::make_temp_dir("atomic");
    const auto target = dir / "nested" / "artifact.json";
    jitanon::atomic_write_file(target, "payload");
    CHECK(testsupport::read_file(target) == "payload");
    CHECK_FALSE(std::filesystem::exists(target.string() + ".tmp"));

    jitanon::atomic_write_file(target, "replaced");
    CHECK(testsupport::read_file(target) == "replaced");
    std::filesystem::remove_all(dir);
}

TEST_CASE("report_summary: two rows, original IPR pinned to zero") {
    jitanon::PrivacyReport privacy;
    privacy.ipr_percent = 90.2;
    jitanon::UtilityReport orig, anon;
    orig.mean_f1 = 0.492;
    anon.mean_f1 = 0.475;

    const auto summary = jitanon::report_summary(privacy, orig, anon, 42);
    REQUIRE(summary["rows"].size() == 2);
    const auto& row0 = summary["rows"][0];
    CHECK(row0["approach"] == "original");
    CHECK(row0["ipr_percent"] == 0.0);
    CHECK(row0["privacy_level"] == 0);
    CHECK(row0["mean_f1_percent"] == doctest::Approx(49.2));
    const auto& row1 = summary["rows"][1];
    CHECK(row1["approach"] == "anonymized");
    CHECK(row1["ipr_percent"] == doctest::Approx(90.2));
    CHECK(row1["privacy_level"] == 2);
    CHECK(row1["mean_f1_percent"] == doctest::Approx(47.5));
    CHECK(summary["seed"] == 42);

    const auto csv = jitanon::summary_to_csv(summary);
    CHECK(csv.find("approach,mean_f1_percent,ipr_percent,privacy_level\n") == 0);
    CHECK(csv.find("original,") != std::string::npos);
    CHECK(csv.find("anonymized,") != std::string::npos);
    CHECK(csv.find(",2\n") != std::string::npos);

    // level drops to 0 below the level-1 threshold
    privacy.ipr_percent = 64.9;
    const auto low = jitanon::report_summary(privacy, orig, anon, 42);
    CHECK(low["rows"][1]["privacy_level"] == 0);

    // byte-identical on repeated serialization
    const auto again = jitanon::report_summary(privacy, orig, anon, 42);
    CHECK(low.dump(2) == again.dump(2));
    CHECK(jitanon::summary_to_csv(low) == jitanon::summary_to_csv(again));
}

TEST_CASE("run_pipeline: artifacts, constraints, determinism") {
    const auto dir = testsupport::make_temp_dir("pipe");
    const auto input = write_pipeline_corpus(dir);

    auto j = minimal_config(input, dir / "out1");
    const auto config = jitanon::config_from_json(j);
    const auto result = jitanon::run_pipeline(config);

    CHECK(result.cluster_count > 0);
    CHECK(result.fallback_count == result.cluster_count);
    CHECK(result.model_count == 0);
    CHECK(result.privacy.total_queries == 240);

    for (const char* name :
         {"clusters.json", "stats.json", "params.json", "anonymized.csv", "anonymized.meta.json",
          "privacy_report.json", "utility_original.json", "utility_anonymized.json",
          "summary.json", "summary.csv"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / "out1" / name), name);
    }

    // anonymized rows still parse and respect the constraints
    const auto anonymized = jitanon::load_corpus(dir / "out1" / "anonymized.csv");
    REQUIRE(anonymized.size() == 120);
    for (const auto& rec : anonymized.records) {
        CHECK(rec.la >= 0);
        CHECK(rec.ld >= 0);
        CHECK(rec.churn == rec.la + rec.ld);
    }

    // a second run with the same config is byte-identical
    j["out"] = (dir / "out2").string();
    jitanon::run_pipeline(jitanon::config_from_json(j));
    for (const char* name : {"anonymized.csv", "summary.json", "privacy_report.json",
                             "params.json", "clusters.json"}) {
        CHECK_MESSAGE(testsupport::read_file(dir / "out1" / name) ==
                          testsupport::read_file(dir / "out2" / name),
                      name);
    }

    // sidecar records the provenance hash and seed
    const auto meta =
        nlohmann::json::parse(testsupport::read_file(dir / "out1" / "anonymized.meta.json"));
    CHECK(meta["seed"] == 42);
    CHECK(meta["prng_algorithm"].is_string());
    CHECK(meta["params_manifest_fnv1a64"].is_string());
    CHECK(meta["params_manifest_fnv1a64"].get<std::string>().size() == 16);

    std::filesystem::remove_all(dir);
}

TEST_CASE("run_pipeline: empty input path is a ConfigError") {
    jitanon::RunConfig config;
    CHECK_THROWS_AS(jitanon::run_pipeline(config), jitanon::ConfigError);
}
