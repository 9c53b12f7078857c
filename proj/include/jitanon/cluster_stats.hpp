#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "jitanon/binning.hpp"
#include "jitanon/corpus.hpp"

namespace jitanon {

/// Seven-point quantile sketch of one metric; non-decreasing by construction.
struct QuantileSummary {
    double min = 0, p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0, max = 0;

    bool monotone() const {
        return min <= p5 && p5 <= p25 && p25 <= p50 && p50 <= p75 && p75 <= p95 && p95 <= max;
    }
};

/// Per-cluster profile handed to the parameter generator: member count,
/// quantiles of la/ld/churn/ratio, and the primary-QID interval (absent for
/// the -1 bin).
struct ClusterStats {
    std::string cluster_id;
    std::int64_t count = 0;
    QuantileSummary la, ld, churn, ratio;
    std::optional<double> bin_left, bin_right;
};

QuantileSummary summarize_values(std::vector<double> values);

/// Throws EmptyCluster when members is empty. Members must carry derived
/// churn/ratio.
ClusterStats summarize_cluster(const std::vector<CommitRecord>& members, const ClusterKey& key,
                               const BinEdges& edges);

/// One ClusterStats per non-empty cluster; counts sum to the corpus size.
std::map<std::string, ClusterStats> summarize_all(const CommitCorpus& corpus,
                                                  const ClusterAssignment& assignment);

/// The exact JSON object sent as the user-message payload (and exported for
/// audits): cluster_id, count, bin bounds (null for -1) and the four
/// quantile blocks.
nlohmann::json cluster_stats_to_json(const ClusterStats& stats);

}  // namespace jitanon
