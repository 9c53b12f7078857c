#include "jitanon/binning.hpp"

#include <algorithm>
#include <charconv>

#include "jitanon/errors.hpp"
#include "jitanon/rng.hpp"
#include "jitanon/stats.hpp"

namespace jitanon {

ClusterKey ClusterKey::parse(std::string_view label) {
    const auto bar = label.rfind('|');
    if (bar == std::string_view::npos || bar == 0 || bar + 1 == label.size()) {
        throw Error("bad cluster label: " + std::string(label));
    }
    ClusterKey key;
    key.qid = std::string(label.substr(0, bar));
    const auto idx = label.substr(bar + 1);
    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), key.bin_index);
    if (ec != std::errc{} || ptr != idx.data() + idx.size()) {
        throw Error("bad cluster label: " + std::string(label));
    }
    return key;
}

BinEdges compute_bin_edges(std::string qid, std::vector<double> values, int n_bins) {
    if (n_bins < 2) throw Error("n_bins must be >= 2");
    if (values.empty()) throw AllMissing(qid);
    std::sort(values.begin(), values.end());

    BinEdges out;
    out.qid = std::move(qid);
    out.edges.reserve(n_bins + 1);
    for (int i = 0; i <= n_bins; ++i) {
        const double q = quantile_sorted(values, static_cast<double>(i) / n_bins);
        if (out.edges.empty() || q > out.edges.back()) out.edges.push_back(q);
    }
    return out;
}

BinEdges compute_bin_edges(std::string qid, const std::vector<std::optional<double>>& values,
                           int n_bins) {
    std::vector<double> present;
    present.reserve(values.size());
    for (const auto& v : values) {
        if (v.has_value()) present.push_back(*v);
    }
    return compute_bin_edges(std::move(qid), std::move(present), n_bins);
}

std::string_view assign_primary_qid(std::string_view commit_id,
                                    std::span<const std::string_view> qid_list) {
    if (qid_list.empty()) throw EmptyQidList();
    return qid_list[fnv1a64(commit_id) % qid_list.size()];
}

int bin_index_for(std::optional<double> value, const BinEdges& edges) {
    if (!value.has_value() || edges.edges.empty()) return -1;
    const double v = *value;
    const auto& e = edges.edges;
    if (e.size() == 1) return v == e.front() ? 1 : -1;
    if (v < e.front() || v > e.back()) return -1;
    if (v == e.front()) return 1;  // column minimum belongs to the first bin
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (v <= e[i]) return static_cast<int>(i);
    }
    return -1;  // unreachable given the range check
}

ClusterKey assign_cluster(const CommitRecord& record, const BinEdges& edges) {
    const std::size_t q = qid_index(edges.qid);
    std::optional<double> value;
    if (q != static_cast<std::size_t>(-1)) value = record.qids[q];
    return ClusterKey{edges.qid, bin_index_for(value, edges)};
}

ClusterAssignment cluster_corpus(const CommitCorpus& corpus, int n_bins) {
    ClusterAssignment assignment;

    std::array<std::optional<BinEdges>, kQidCount> edges;
    for (std::size_t q = 0; q < kQidCount; ++q) {
        std::vector<double> present;
        present.reserve(corpus.records.size());
        for (const auto& rec : corpus.records) {
            if (rec.qids[q].has_value()) present.push_back(*rec.qids[q]);
        }
        if (!present.empty()) {
            edges[q] = compute_bin_edges(std::string(kQidNames[q]), std::move(present), n_bins);
        }
    }

    for (const auto& rec : corpus.records) {
        const auto primary = assign_primary_qid(rec.commit_id, kQidNames);
        const std::size_t q = qid_index(primary);
        if (!edges[q].has_value()) throw AllMissing(std::string(primary));
        assignment.by_commit.emplace(rec.commit_id, assign_cluster(rec, *edges[q]));
    }
    for (std::size_t q = 0; q < kQidCount; ++q) {
        if (edges[q].has_value()) {
            assignment.edges_by_qid.emplace(std::string(kQidNames[q]), std::move(*edges[q]));
        }
    }
    return assignment;
}

nlohmann::json assignment_to_json(const ClusterAssignment& assignment) {
    nlohmann::json edges = nlohmann::json::object();
    for (const auto& [qid, e] : assignment.edges_by_qid) edges[qid] = e.edges;
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [id, key] : assignment.by_commit) labels[id] = key.str();
    return nlohmann::json{{"edges", edges}, {"assignments", labels}};
}

}  // namespace jitanon
