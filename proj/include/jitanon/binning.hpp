#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "jitanon/corpus.hpp"

namespace jitanon {

/// Quantile bin boundaries for one QID. Strictly ascending after
/// deduplication; a constant column collapses to one edge (one degenerate
/// bin holding the single value).
struct BinEdges {
    std::string qid;
    std::vector<double> edges;

    /// Number of intervals this edge set defines.
    int bin_count() const {
        return edges.size() <= 1 ? 1 : static_cast<int>(edges.size()) - 1;
    }
};

/// Cluster label, rendered as "<QID>|<bin_index>". bin_index -1 collects
/// missing and out-of-range values.
struct ClusterKey {
    std::string qid;
    int bin_index = -1;

    std::string str() const { return qid + "|" + std::to_string(bin_index); }
    static ClusterKey parse(std::string_view label);

    bool operator==(const ClusterKey&) const = default;
    auto operator<=>(const ClusterKey&) const = default;
};

struct ClusterAssignment {
    std::map<std::string, ClusterKey> by_commit;   // commit_id -> cluster
    std::map<std::string, BinEdges> edges_by_qid;  // only QIDs with usable edges
};

/// Edges at quantiles 0, 1/n_bins, ..., 1 of the non-missing values
/// (n_bins+1 candidates before deduplication). Throws AllMissing when no
/// value is present.
BinEdges compute_bin_edges(std::string qid, const std::vector<std::optional<double>>& values,
                           int n_bins = 20);
BinEdges compute_bin_edges(std::string qid, std::vector<double> values, int n_bins = 20);

/// Primary QID for a commit: qid_list[fnv1a64(commit_id) mod len].
std::string_view assign_primary_qid(std::string_view commit_id,
                                    std::span<const std::string_view> qid_list);

/// Bin index for a value against an edge set. Intervals are (e_i, e_{i+1}]
/// numbered from 1, the first also containing its left edge; missing or
/// out-of-range values get -1.
int bin_index_for(std::optional<double> value, const BinEdges& edges);

/// Cluster for one record given its primary QID's edges.
ClusterKey assign_cluster(const CommitRecord& record, const BinEdges& edges);

/// Full Step-1 pass: edges for all ten QIDs, then one cluster per record.
/// AllMissing surfaces only if the offending QID is actually selected as
/// some commit's primary.
ClusterAssignment cluster_corpus(const CommitCorpus& corpus, int n_bins = 20);

/// Audit export: { "edges": {qid: [..]}, "assignments": {commit_id: "qid|idx"} }.
nlohmann::json assignment_to_json(const ClusterAssignment& assignment);

}  // namespace jitanon
