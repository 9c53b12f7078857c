#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "jitanon/binning.hpp"
#include "jitanon/corpus.hpp"

namespace jitanon {

/// SAD attacker knobs. Bin boundaries are always fit on the ORIGINAL corpus
/// and frozen before the anonymized one is scored.
struct AttackerConfig {
    int qid_bins = 10;        // equal-frequency bins on attacker-known QIDs
    int sensitive_bins = 10;  // equal-frequency bins on la and ld
    /// QIDs per query signature, taken in canonical order; -1 = every QID
    /// available on the row.
    int query_qid_count = -1;
};

/// One attacker probe: the generating row's QID bin-signature plus the
/// sensitive attribute under attack ("la" or "ld"). Rows with identical
/// signatures yield identical predicates but remain distinct queries.
struct Query {
    std::string commit_id;
    std::vector<std::pair<std::size_t, int>> predicate;  // (qid index, bin), ascending
    std::string attribute;
};

struct AttributeBreakdown {
    std::int64_t queries = 0;
    std::int64_t breaches = 0;
    double ipr_percent = 100.0;
};

struct PrivacyReport {
    std::int64_t total_queries = 0;
    std::int64_t breaches = 0;
    double ipr_percent = 100.0;
    AttributeBreakdown la, ld;
};

/// Equal-frequency boundaries: quantiles i/k of values, deduplicated.
/// Assignment uses bin_index_for (same half-open convention as binning).
BinEdges equal_frequency_bins(std::string name, std::vector<double> values, int k);

/// One query per original record per sensitive attribute; rows whose QIDs
/// are all missing produce an empty signature and are skipped.
std::vector<Query> generate_queries(const CommitCorpus& original, const AttackerConfig& config);

/// Breach test for one query: modal sensitive BIN of the matching original
/// rows equals that of the matching anonymized rows. Mode ties go to the
/// smallest bin index on both sides; an empty anonymized group is a
/// non-breach. Throws EmptyOriginalGroup for foreign predicates.
bool evaluate_query(const Query& query, const CommitCorpus& original,
                    const CommitCorpus& anonymized, const AttackerConfig& config);

/// Runs the full query set and scores IPR = (1 - breaches/total) * 100.
/// Corpora must hold the same commit_id set (RowMismatch otherwise).
PrivacyReport compute_ipr(const CommitCorpus& original, const CommitCorpus& anonymized,
                          const AttackerConfig& config = {});

nlohmann::json privacy_report_to_json(const PrivacyReport& report, const AttackerConfig& config);

}  // namespace jitanon
