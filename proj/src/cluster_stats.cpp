#include "jitanon/cluster_stats.hpp"

#include <algorithm>

#include "jitanon/errors.hpp"
#include "jitanon/stats.hpp"

namespace jitanon {

QuantileSummary summarize_values(std::vector<double> values) {
    if (values.empty()) throw EmptyCluster();
    std::sort(values.begin(), values.end());
    QuantileSummary s;
    s.min = values.front();
    s.p5 = quantile_sorted(values, 0.05);
    s.p25 = quantile_sorted(values, 0.25);
    s.p50 = quantile_sorted(values, 0.50);
    s.p75 = quantile_sorted(values, 0.75);
    s.p95 = quantile_sorted(values, 0.95);
    s.max = values.back();
    return s;
}

ClusterStats summarize_cluster(const std::vector<CommitRecord>& members, const ClusterKey& key,
                               const BinEdges& edges) {
    if (members.empty()) throw EmptyCluster();

    std::vector<double> la, ld, churn, ratio;
    la.reserve(members.size());
    ld.reserve(members.size());
    churn.reserve(members.size());
    ratio.reserve(members.size());
    for (const auto& rec : members) {
        la.push_back(static_cast<double>(rec.la));
        ld.push_back(static_cast<double>(rec.ld));
        churn.push_back(static_cast<double>(rec.churn));
        ratio.push_back(rec.ratio);
    }

    ClusterStats stats;
    stats.cluster_id = key.str();
    stats.count = static_cast<std::int64_t>(members.size());
    stats.la = summarize_values(std::move(la));
    stats.ld = summarize_values(std::move(ld));
    stats.churn = summarize_values(std::move(churn));
    stats.ratio = summarize_values(std::move(ratio));

    const auto& e = edges.edges;
    if (key.bin_index >= 1 && static_cast<std::size_t>(key.bin_index) < e.size()) {
        stats.bin_left = e[key.bin_index - 1];
        stats.bin_right = e[key.bin_index];
    } else if (key.bin_index == 1 && e.size() == 1) {
        // degenerate single-edge column: the bin is the single value
        stats.bin_left = e.front();
        stats.bin_right = e.front();
    }
    return stats;
}

std::map<std::string, ClusterStats> summarize_all(const CommitCorpus& corpus,
                                                  const ClusterAssignment& assignment) {
    std::map<std::string, std::vector<CommitRecord>> members;
    std::map<std::string, ClusterKey> keys;
    for (const auto& rec : corpus.records) {
        auto it = assignment.by_commit.find(rec.commit_id);
        if (it == assignment.by_commit.end()) {
            throw Error("assignment does not cover commit: " + rec.commit_id);
        }
        const auto label = it->second.str();
        members[label].push_back(rec);
        keys.emplace(label, it->second);
    }

    static const BinEdges kNoEdges{};
    std::map<std::string, ClusterStats> out;
    for (auto& [label, recs] : members) {
        const ClusterKey& key = keys.at(label);
        auto eit = assignment.edges_by_qid.find(key.qid);
        const BinEdges& edges = eit == assignment.edges_by_qid.end() ? kNoEdges : eit->second;
        out.emplace(label, summarize_cluster(recs, key, edges));
    }
    return out;
}

nlohmann::json cluster_stats_to_json(const ClusterStats& stats) {
    auto block = [](const QuantileSummary& s) {
        return nlohmann::json{{"min", s.min}, {"p5", s.p5},   {"p25", s.p25}, {"p50", s.p50},
                              {"p75", s.p75}, {"p95", s.p95}, {"max", s.max}};
    };
    nlohmann::json j{
        {"cluster_id", stats.cluster_id},
        {"count", stats.count},
        {"bin_left", nullptr},
        {"bin_right", nullptr},
        {"la", block(stats.la)},
        {"ld", block(stats.ld)},
        {"churn", block(stats.churn)},
        {"ratio", block(stats.ratio)},
    };
    if (stats.bin_left.has_value()) j["bin_left"] = *stats.bin_left;
    if (stats.bin_right.has_value()) j["bin_right"] = *stats.bin_right;
    return j;
}

}  // namespace jitanon
