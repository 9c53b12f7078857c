#include "jitanon/privacy.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "jitanon/errors.hpp"

namespace jitanon {
namespace {

struct AttackerModel {
    std::vector<BinEdges> qid_edges;  // one per kQidNames slot (may be empty)
    BinEdges la_edges, ld_edges;
};

// Fits all boundaries on the original corpus; QIDs that are entirely missing
// simply never appear in signatures.
AttackerModel fit_attacker(const CommitCorpus& original, const AttackerConfig& config) {
    if (config.qid_bins < 2 || config.sensitive_bins < 2) {
        throw ConfigError("attacker bin counts must be >= 2");
    }
    if (original.records.empty()) throw EmptyCorpus();

    AttackerModel model;
    model.qid_edges.resize(kQidCount);
    for (std::size_t q = 0; q < kQidCount; ++q) {
        std::vector<double> present;
        for (const auto& r : original.records) {
            if (r.qids[q].has_value()) present.push_back(*r.qids[q]);
        }
        if (present.empty()) continue;
        model.qid_edges[q] =
            equal_frequency_bins(std::string(kQidNames[q]), std::move(present), config.qid_bins);
    }

    std::vector<double> la_vals, ld_vals;
    la_vals.reserve(original.size());
    ld_vals.reserve(original.size());
    for (const auto& r : original.records) {
        la_vals.push_back(static_cast<double>(r.la));
        ld_vals.push_back(static_cast<double>(r.ld));
    }
    model.la_edges = equal_frequency_bins("la", std::move(la_vals), config.sensitive_bins);
    model.ld_edges = equal_frequency_bins("ld", std::move(ld_vals), config.sensitive_bins);
    return model;
}

std::vector<std::pair<std::size_t, int>> signature_of(const CommitRecord& record,
                                                      const AttackerModel& model,
                                                      const AttackerConfig& config) {
    std::vector<std::pair<std::size_t, int>> sig;
    const std::size_t limit =
        config.query_qid_count < 0 ? kQidCount : static_cast<std::size_t>(config.query_qid_count);
    for (std::size_t q = 0; q < kQidCount && sig.size() < limit; ++q) {
        if (!record.qids[q].has_value() || model.qid_edges[q].edges.empty()) continue;
        sig.emplace_back(q, bin_index_for(record.qids[q], model.qid_edges[q]));
    }
    return sig;
}

bool matches(const CommitRecord& record, const std::vector<std::pair<std::size_t, int>>& predicate,
             const AttackerModel& model) {
    for (const auto& [q, bin] : predicate) {
        if (!record.qids[q].has_value()) return false;
        if (bin_index_for(record.qids[q], model.qid_edges[q]) != bin) return false;
    }
    return true;
}

// Modal bin with ties to the smallest index; bins come from the frozen
// original-fit edges, so anonymized outliers may land in bin -1.
int modal_bin(const std::vector<std::int64_t>& values, const BinEdges& edges) {
    std::map<int, std::size_t> counts;
    for (const auto v : values) ++counts[bin_index_for(static_cast<double>(v), edges)];
    int best_bin = -1;
    std::size_t best_count = 0;
    for (const auto& [bin, count] : counts) {
        if (count > best_count) {  // map iterates ascending, so first max wins
            best_bin = bin;
            best_count = count;
        }
    }
    return best_bin;
}

std::vector<std::int64_t> gather(const CommitCorpus& corpus,
                                 const std::vector<std::pair<std::size_t, int>>& predicate,
                                 const AttackerModel& model, bool want_la) {
    std::vector<std::int64_t> out;
    for (const auto& r : corpus.records) {
        if (matches(r, predicate, model)) out.push_back(want_la ? r.la : r.ld);
    }
    return out;
}

bool breach_for(const std::vector<std::pair<std::size_t, int>>& predicate, bool want_la,
                const CommitCorpus& original, const CommitCorpus& anonymized,
                const AttackerModel& model) {
    const auto orig = gather(original, predicate, model, want_la);
    if (orig.empty()) throw EmptyOriginalGroup();
    const auto anon = gather(anonymized, predicate, model, want_la);
    if (anon.empty()) return false;
    const BinEdges& edges = want_la ? model.la_edges : model.ld_edges;
    return modal_bin(orig, edges) == modal_bin(anon, edges);
}

std::string predicate_key(const std::vector<std::pair<std::size_t, int>>& predicate) {
    std::string key;
    for (const auto& [q, bin] : predicate) {
        key += std::to_string(q);
        key += ':';
        key += std::to_string(bin);
        key += ';';
    }
    return key;
}

}  // namespace

BinEdges equal_frequency_bins(std::string name, std::vector<double> values, int k) {
    return compute_bin_edges(std::move(name), std::move(values), k);
}

std::vector<Query> generate_queries(const CommitCorpus& original, const AttackerConfig& config) {
    const AttackerModel model = fit_attacker(original, config);
    std::vector<Query> queries;
    queries.reserve(original.size() * 2);
    for (const auto& r : original.records) {
        auto sig = signature_of(r, model, config);
        if (sig.empty()) continue;
        queries.push_back({r.commit_id, sig, "la"});
        queries.push_back({r.commit_id, std::move(sig), "ld"});
    }
    return queries;
}

bool evaluate_query(const Query& query, const CommitCorpus& original,
                    const CommitCorpus& anonymized, const AttackerConfig& config) {
    const AttackerModel model = fit_attacker(original, config);
    return breach_for(query.predicate, query.attribute == "la", original, anonymized, model);
}

PrivacyReport compute_ipr(const CommitCorpus& original, const CommitCorpus& anonymized,
                          const AttackerConfig& config) {
    std::set<std::string> orig_ids, anon_ids;
    for (const auto& r : original.records) orig_ids.insert(r.commit_id);
    for (const auto& r : anonymized.records) anon_ids.insert(r.commit_id);
    if (orig_ids != anon_ids) throw RowMismatch("corpora hold different commit_id sets");

    const AttackerModel model = fit_attacker(original, config);
    PrivacyReport report;
    // Queries sharing a predicate share breach flags; evaluate each
    // (predicate, attribute) pair once.
    std::map<std::string, std::pair<bool, bool>> cache;
    for (const auto& r : original.records) {
        const auto sig = signature_of(r, model, config);
        if (sig.empty()) continue;
        auto it = cache.find(predicate_key(sig));
        if (it == cache.end()) {
            const bool la_breach = breach_for(sig, true, original, anonymized, model);
            const bool ld_breach = breach_for(sig, false, original, anonymized, model);
            it = cache.emplace(predicate_key(sig), std::make_pair(la_breach, ld_breach)).first;
        }
        report.la.queries += 1;
        report.la.breaches += it->second.first ? 1 : 0;
        report.ld.queries += 1;
        report.ld.breaches += it->second.second ? 1 : 0;
    }

    auto finish = [](AttributeBreakdown& b) {
        b.ipr_percent = b.queries == 0
                            ? 100.0
                            : (1.0 - static_cast<double>(b.breaches) /
                                         static_cast<double>(b.queries)) *
                                  100.0;
    };
    finish(report.la);
    finish(report.ld);
    report.total_queries = report.la.queries + report.ld.queries;
    report.breaches = report.la.breaches + report.ld.breaches;
    report.ipr_percent =
        report.total_queries == 0
            ? 100.0
            : (1.0 - static_cast<double>(report.breaches) /
                         static_cast<double>(report.total_queries)) *
                  100.0;
    return report;
}

nlohmann::json privacy_report_to_json(const PrivacyReport& report, const AttackerConfig& config) {
    auto attr = [](const AttributeBreakdown& b) {
        return nlohmann::json{
            {"queries", b.queries}, {"breaches", b.breaches}, {"ipr_percent", b.ipr_percent}};
    };
    return nlohmann::json{
        {"total_queries", report.total_queries},
        {"breaches", report.breaches},
        {"ipr_percent", report.ipr_percent},
        {"per_attribute", {{"la", attr(report.la)}, {"ld", attr(report.ld)}}},
        {"attacker",
         {{"qid_bins", config.qid_bins},
          {"sensitive_bins", config.sensitive_bins},
          {"query_qid_count", config.query_qid_count}}},
    };
}

}  // namespace jitanon
