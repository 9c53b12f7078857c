#pragma once

// Shared test scaffolding: temp dirs, corpus builders, and independent
// oracle implementations (written straight from the documented definitions,
// on purpose not calling the library code they check).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "jitanon/corpus.hpp"

namespace testsupport {

inline std::filesystem::path make_temp_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("jitanon_" + tag + "_" + std::to_string(++counter) + "_" +
                      std::to_string(static_cast<unsigned>(::getpid())));
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline jitanon::CommitRecord make_record(std::string id, std::int64_t ts, std::int64_t la,
                                         std::int64_t ld,
                                         std::vector<std::optional<double>> qids = {},
                                         bool buggy = false) {
    jitanon::CommitRecord r;
    r.commit_id = std::move(id);
    r.timestamp = ts;
    r.la = la;
    r.ld = ld;
    r.buggy = buggy;
    for (std::size_t q = 0; q < qids.size() && q < jitanon::kQidCount; ++q) r.qids[q] = qids[q];
    r.churn = la + ld;
    r.ratio = r.churn > 0 ? static_cast<double>(la) / static_cast<double>(r.churn) : 0.0;
    return r;
}

// ---- independent quantile / binning oracle ------------------------------

inline double bf_quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (p <= 0.0) return v.front();
    if (p >= 1.0) return v.back();
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

inline std::vector<double> bf_edges(const std::vector<double>& values, int k) {
    std::vector<double> edges;
    for (int i = 0; i <= k; ++i) {
        const double q = bf_quantile(values, static_cast<double>(i) / k);
        if (edges.empty() || q > edges.back()) edges.push_back(q);
    }
    return edges;
}

inline int bf_bin(double v, const std::vector<double>& e) {
    if (e.empty()) return -1;
    if (e.size() == 1) return v == e.front() ? 1 : -1;
    if (v < e.front() || v > e.back()) return -1;
    if (v == e.front()) return 1;
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (v <= e[i]) return static_cast<int>(i);
    }
    return -1;
}

// ---- brute-force SAD / IPR oracle ---------------------------------------

struct BfIprReport {
    long total = 0;
    long breaches = 0;
    double ipr = 100.0;
};

inline BfIprReport brute_force_ipr(const jitanon::CommitCorpus& original,
                                   const jitanon::CommitCorpus& anonymized, int qid_bins,
                                   int sensitive_bins) {
    // Boundaries fit on the original corpus only.
    std::vector<std::vector<double>> qid_edges(jitanon::kQidCount);
    for (std::size_t q = 0; q < jitanon::kQidCount; ++q) {
        std::vector<double> vals;
        for (const auto& r : original.records) {
            if (r.qids[q].has_value()) vals.push_back(*r.qids[q]);
        }
        if (!vals.empty()) qid_edges[q] = bf_edges(vals, qid_bins);
    }
    std::vector<double> la_vals, ld_vals;
    for (const auto& r : original.records) {
        la_vals.push_back(static_cast<double>(r.la));
        ld_vals.push_back(static_cast<double>(r.ld));
    }
    const auto la_edges = bf_edges(la_vals, sensitive_bins);
    const auto ld_edges = bf_edges(ld_vals, sensitive_bins);

    const auto mode_of = [](const std::vector<int>& bins) {
        std::map<int, int> counts;
        for (const int b : bins) counts[b] += 1;
        int best = 0, best_bin = -1;
        bool first = true;
        for (const auto& [bin, count] : counts) {
            if (first || count > best) {
                best = count;
                best_bin = bin;
                first = false;
            }
        }
        return best_bin;
    };

    BfIprReport report;
    for (const auto& probe : original.records) {
        // The attacker's predicate: every QID the probe row has a value for.
        std::vector<std::pair<std::size_t, int>> predicate;
        for (std::size_t q = 0; q < jitanon::kQidCount; ++q) {
            if (!probe.qids[q].has_value() || qid_edges[q].empty()) continue;
            predicate.emplace_back(q, bf_bin(*probe.qids[q], qid_edges[q]));
        }
        if (predicate.empty()) continue;

        const auto group_bins = [&](const jitanon::CommitCorpus& corpus, bool la) {
            std::vector<int> bins;
            for (const auto& r : corpus.records) {
                bool ok = true;
                for (const auto& [q, bin] : predicate) {
                    if (!r.qids[q].has_value() || bf_bin(*r.qids[q], qid_edges[q]) != bin) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    bins.push_back(bf_bin(static_cast<double>(la ? r.la : r.ld),
                                          la ? la_edges : ld_edges));
                }
            }
            return bins;
        };

        for (const bool attack_la : {true, false}) {
            report.total += 1;
            const auto anon = group_bins(anonymized, attack_la);
            if (anon.empty()) continue;  // attacker learns nothing
            const auto orig = group_bins(original, attack_la);
            if (mode_of(orig) == mode_of(anon)) report.breaches += 1;
        }
    }
    report.ipr = report.total == 0
                     ? 100.0
                     : (1.0 - static_cast<double>(report.breaches) /
                                  static_cast<double>(report.total)) *
                           100.0;
    return report;
}

// ---- brute-force decision-stump oracle ----------------------------------

// Best single-feature Gini split by exhaustive scan: every midpoint between
// consecutive distinct sorted values, ties resolved to the smaller
// threshold. Returns (threshold, gain); gain 0 when nothing splits.
inline std::pair<double, double> bf_best_stump(const std::vector<double>& x,
                                               const std::vector<int>& y) {
    std::vector<std::pair<double, int>> pts;
    for (std::size_t i = 0; i < x.size(); ++i) pts.emplace_back(x[i], y[i]);
    std::sort(pts.begin(), pts.end());
    const auto gini_of = [](int c0, int c1) {
        const double n = c0 + c1;
        if (n == 0) return 0.0;
        const double p0 = c0 / n, p1 = c1 / n;
        return 1.0 - p0 * p0 - p1 * p1;
    };
    int total0 = 0, total1 = 0;
    for (const auto& [value, label] : pts) (label == 0 ? total0 : total1) += 1;
    const double parent = gini_of(total0, total1);
    const double n = static_cast<double>(pts.size());

    double best_gain = 0.0, best_threshold = 0.0;
    int l0 = 0, l1 = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        (pts[i].second == 0 ? l0 : l1) += 1;
        if (pts[i].first == pts[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double gain = parent - (nl * gini_of(l0, l1) +
                                      (n - nl) * gini_of(total0 - l0, total1 - l1)) /
                                         n;
        if (gain > best_gain) {
            best_gain = gain;
            best_threshold = (pts[i].first + pts[i + 1].first) / 2.0;
        }
    }
    return {best_threshold, best_gain};
}

}  // namespace testsupport
