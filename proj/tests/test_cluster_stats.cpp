#include "doctest.h"

#include <algorithm>
#include <random>

#include "jitanon/binning.hpp"
#include "jitanon/cluster_stats.hpp"
#include "jitanon/errors.hpp"
#include "jitanon/rng.hpp"
#include "support/helpers.hpp"

using namespace jitanon;

TEST_CASE("summarize_values: hand-computed quantiles") {
    // churn [10,20,30,40]: p50 via h=(n-1)*0.5=1.5 -> 25
    const auto s = summarize_values({10, 20, 30, 40});
    CHECK(s.min == 10.0);
    CHECK(s.p50 == doctest::Approx(25.0));
    CHECK(s.max == 40.0);
    CHECK(s.p25 == doctest::Approx(17.5));
    CHECK(s.p75 == doctest::Approx(32.5));
    CHECK(s.monotone());
    CHECK_THROWS_AS(summarize_values({}), EmptyCluster);
}

TEST_CASE("summarize_cluster: single member collapses all quantiles") {
    const std::vector<CommitRecord> members{testsupport::make_record("c1", 0, 30, 20)};
    const BinEdges edges{"ndev", {1, 3, 5, 8, 12}};
    const auto stats = summarize_cluster(members, ClusterKey{"ndev", 2}, edges);
    CHECK(stats.count == 1);
    CHECK(stats.cluster_id == "ndev|2");
    CHECK(stats.churn.min == 50.0);
    CHECK(stats.churn.p5 == 50.0);
    CHECK(stats.churn.p95 == 50.0);
    CHECK(stats.churn.max == 50.0);
    CHECK(stats.ratio.p50 == doctest::Approx(0.6));
    REQUIRE(stats.bin_left.has_value());
    CHECK(*stats.bin_left == 3.0);
    CHECK(*stats.bin_right == 5.0);
}

TEST_CASE("summarize_cluster: a ndev|2-shaped cluster reports its medians") {
    // Build 412 members whose churn quantiles land on the documented shape:
    // median 78, p75 120, p95 210, ratio median 0.42.
    std::vector<CommitRecord> members;
    SplitMix64 stream(7);
    for (int i = 0; i < 412; ++i) {
        double churn;
        const double u = (i + 0.5) / 412.0;
        if (u < 0.5) {
            churn = 10 + u * 2 * 68;          // ramp to 78 at the median
        } else if (u < 0.75) {
            churn = 78 + (u - 0.5) * 4 * 42;  // 78 -> 120
        } else if (u < 0.95) {
            churn = 120 + (u - 0.75) * 5 * 90;  // 120 -> 210
        } else {
            churn = 210 + (u - 0.95) * 20 * 400;
        }
        const auto total = static_cast<std::int64_t>(churn);
        const auto la = static_cast<std::int64_t>(0.42 * static_cast<double>(total));
        members.push_back(testsupport::make_record("m" + std::to_string(i), i, la, total - la));
    }
    std::shuffle(members.begin(), members.end(), std::mt19937(3));
    const BinEdges edges{"ndev", {1, 3, 5, 8, 12}};
    const auto stats = summarize_cluster(members, ClusterKey{"ndev", 2}, edges);
    CHECK(stats.count == 412);
    CHECK(stats.churn.p50 == doctest::Approx(78).epsilon(0.02));
    CHECK(stats.churn.p75 == doctest::Approx(120).epsilon(0.02));
    CHECK(stats.churn.p95 == doctest::Approx(210).epsilon(0.02));
    CHECK(stats.ratio.p50 == doctest::Approx(0.42).epsilon(0.03));
    CHECK(stats.la.monotone());
    CHECK(stats.ld.monotone());
    CHECK(stats.churn.monotone());
    CHECK(stats.ratio.monotone());
}

namespace {

CommitCorpus small_corpus(int n) {
    CommitCorpus corpus;
    SplitMix64 stream(11);
    for (int i = 0; i < n; ++i) {
        std::vector<std::optional<double>> qids;
        for (std::size_t q = 0; q < kQidCount; ++q) {
            qids.emplace_back(static_cast<double>(stream.next_u64() % 100));
        }
        corpus.records.push_back(testsupport::make_record(
            "s" + std::to_string(i), i, static_cast<std::int64_t>(stream.next_u64() % 300),
            static_cast<std::int64_t>(stream.next_u64() % 300), qids));
    }
    return corpus;
}

}  // namespace

TEST_CASE("summarize_all: partition accounting and monotonicity") {
    const auto corpus = small_corpus(250);
    const auto assignment = cluster_corpus(corpus, 20);
    const auto stats = summarize_all(corpus, assignment);
    std::int64_t total = 0;
    for (const auto& [label, s] : stats) {
        total += s.count;
        CHECK(s.count >= 1);
        CHECK(s.la.monotone());
        CHECK(s.ld.monotone());
        CHECK(s.churn.monotone());
        CHECK(s.ratio.monotone());
        CHECK(s.ratio.min >= 0.0);
        CHECK(s.ratio.max <= 1.0);
        CHECK(s.cluster_id == label);
    }
    CHECK(total == static_cast<std::int64_t>(corpus.size()));
}

TEST_CASE("summarize_all: permutation invariance") {
    const auto corpus = small_corpus(120);
    auto shuffled = corpus;
    std::shuffle(shuffled.records.begin(), shuffled.records.end(), std::mt19937(5));
    const auto a = summarize_all(corpus, cluster_corpus(corpus, 20));
    const auto b = summarize_all(shuffled, cluster_corpus(shuffled, 20));
    REQUIRE(a.size() == b.size());
    for (const auto& [label, s] : a) {
        const auto& t = b.at(label);
        CHECK(s.count == t.count);
        CHECK(s.churn.p50 == t.churn.p50);
        CHECK(s.ratio.p95 == t.ratio.p95);
    }
}

TEST_CASE("cluster_stats_to_json: payload shape") {
    const std::vector<CommitRecord> members{testsupport::make_record("c1", 0, 30, 20),
                                            testsupport::make_record("c2", 1, 10, 10)};
    const BinEdges edges{"ndev", {1, 3, 5, 8, 12}};
    const auto j = cluster_stats_to_json(summarize_cluster(members, ClusterKey{"ndev", 2}, edges));
    CHECK(j["cluster_id"] == "ndev|2");
    CHECK(j["count"] == 2);
    CHECK(j["bin_left"] == 3.0);
    CHECK(j["bin_right"] == 5.0);
    for (const auto metric : {"la", "ld", "churn", "ratio"}) {
        REQUIRE(j.contains(metric));
        for (const auto key : {"min", "p5", "p25", "p50", "p75", "p95", "max"}) {
            CHECK(j[metric].contains(key));
        }
    }

    // -1 bin: interval absent -> null
    const auto j2 =
        cluster_stats_to_json(summarize_cluster(members, ClusterKey{"ndev", -1}, edges));
    CHECK(j2["bin_left"].is_null());
    CHECK(j2["bin_right"].is_null());
}
