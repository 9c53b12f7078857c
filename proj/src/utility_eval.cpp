#include "jitanon/utility_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "jitanon/errors.hpp"
#include "jitanon/stats.hpp"

namespace jitanon {
namespace {

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Indices of the k nearest candidates to rows[target] (target excluded when
/// present in candidates); ties break by candidate index.
std::vector<std::size_t> k_nearest(const std::vector<std::vector<double>>& rows,
                                   std::size_t target, const std::vector<std::size_t>& candidates,
                                   std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(candidates.size());
    for (const auto c : candidates) {
        if (c == target) continue;
        dist.emplace_back(sq_distance(rows[target], rows[c]), c);
    }
    const std::size_t keep = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + keep, dist.end());
    std::vector<std::size_t> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(dist[i].second);
    return out;
}

double gini(std::size_t c0, std::size_t c1) {
    const double n = static_cast<double>(c0 + c1);
    if (n == 0.0) return 0.0;
    const double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

}  // namespace

std::vector<std::string> default_feature_names() {
    std::vector<std::string> names(kQidNames.begin(), kQidNames.end());
    names.emplace_back("la");
    names.emplace_back("ld");
    return names;
}

LabeledData extract_features(const CommitCorpus& corpus,
                             const std::vector<std::string>& feature_names) {
    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    LabeledData data;
    data.rows.reserve(corpus.size());
    data.labels.reserve(corpus.size());
    for (const auto& r : corpus.records) {
        std::vector<double> row;
        row.reserve(feature_names.size());
        for (const auto& name : feature_names) {
            if (name == "la") {
                row.push_back(static_cast<double>(r.la));
            } else if (name == "ld") {
                row.push_back(static_cast<double>(r.ld));
            } else if (name == "churn") {
                row.push_back(static_cast<double>(r.churn));
            } else if (name == "ratio") {
                row.push_back(r.ratio);
            } else {
                const std::size_t q = qid_index(name);
                if (q == static_cast<std::size_t>(-1)) {
                    throw ConfigError("unknown feature: " + name);
                }
                row.push_back(r.qids[q].value_or(kNaN));
            }
        }
        data.rows.push_back(std::move(row));
        data.labels.push_back(r.buggy ? 1 : 0);
    }
    return data;
}

std::vector<double> fit_medians(const LabeledData& train) {
    const std::size_t width = train.rows.empty() ? 0 : train.rows.front().size();
    std::vector<double> medians(width, 0.0);
    for (std::size_t f = 0; f < width; ++f) {
        std::vector<double> present;
        for (const auto& row : train.rows) {
            if (!std::isnan(row[f])) present.push_back(row[f]);
        }
        if (present.empty()) continue;
        std::sort(present.begin(), present.end());
        medians[f] = quantile_sorted(present, 0.5);
    }
    return medians;
}

void impute_median(LabeledData& data, const std::vector<double>& medians) {
    for (auto& row : data.rows) {
        for (std::size_t f = 0; f < row.size() && f < medians.size(); ++f) {
            if (std::isnan(row[f])) row[f] = medians[f];
        }
    }
}

void MinMaxScaler::fit(const LabeledData& train) {
    if (train.rows.empty()) throw EmptyTrainingSet();
    const std::size_t width = train.rows.front().size();
    lo.assign(width, std::numeric_limits<double>::infinity());
    hi.assign(width, -std::numeric_limits<double>::infinity());
    for (const auto& row : train.rows) {
        for (std::size_t f = 0; f < width; ++f) {
            lo[f] = std::min(lo[f], row[f]);
            hi[f] = std::max(hi[f], row[f]);
        }
    }
}

void MinMaxScaler::transform(LabeledData& data) const {
    for (auto& row : data.rows) {
        for (std::size_t f = 0; f < row.size() && f < lo.size(); ++f) {
            const double span = hi[f] - lo[f];
            row[f] = span > 0.0 ? (row[f] - lo[f]) / span : 0.0;
        }
    }
}

SmoteEnnResult smote_enn(const LabeledData& train, int k_smote, int k_enn, std::uint64_t seed) {
    SmoteEnnResult result;
    result.data = train;
    auto& data = result.data;

    std::vector<std::size_t> minority, majority;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (data.labels[i] == 1 ? minority : majority).push_back(i);
    }
    int minority_label = 1;
    if (majority.size() < minority.size()) {
        std::swap(minority, majority);
        minority_label = 0;
    }

    if (minority.size() < 2) {
        result.degenerate_minority = true;
        return result;
    }

    // SMOTE: round-robin over minority bases; per synthetic point one u64
    // (neighbor pick) then one uniform (step), in that order.
    SplitMix64 stream(seed);
    const std::size_t n_new = majority.size() - minority.size();
    const std::size_t k_eff = std::min<std::size_t>(k_smote, minority.size() - 1);
    for (std::size_t j = 0; j < n_new; ++j) {
        const std::size_t base = minority[j % minority.size()];
        const auto neighbors = k_nearest(data.rows, base, minority, k_eff);
        const std::size_t pick = neighbors[stream.next_u64() % neighbors.size()];
        const double t = stream.next_uniform();
        std::vector<double> synth = data.rows[base];
        for (std::size_t f = 0; f < synth.size(); ++f) {
            synth[f] += t * (data.rows[pick][f] - synth[f]);
        }
        data.rows.push_back(std::move(synth));
        data.labels.push_back(minority_label);
    }

    // ENN: simultaneous removal of points whose k nearest neighbors (among
    // everything else) vote against their label.
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<bool> drop(data.size(), false);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto neighbors = k_nearest(data.rows, i, all, static_cast<std::size_t>(k_enn));
        if (neighbors.empty()) continue;
        std::size_t agree = 0;
        for (const auto n : neighbors) {
            if (data.labels[n] == data.labels[i]) ++agree;
        }
        drop[i] = 2 * agree < neighbors.size();  // strict majority disagrees
    }

    LabeledData kept;
    std::size_t kept0 = 0, kept1 = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (drop[i]) continue;
        kept.rows.push_back(data.rows[i]);
        kept.labels.push_back(data.labels[i]);
        (data.labels[i] == 0 ? kept0 : kept1) += 1;
    }
    if (kept0 == 0 || kept1 == 0) {
        result.enn_skipped = true;  // keep the balanced pre-ENN set instead
        return result;
    }
    result.data = std::move(kept);
    return result;
}

void RandomForest::train(const LabeledData& train, const RFHyperparams& hp) {
    if (train.rows.empty()) throw EmptyTrainingSet();
    const std::size_t n = train.size();
    const std::size_t width = train.rows.front().size();
    if (static_cast<std::size_t>(hp.max_features_per_split) > width) {
        throw ConfigError("max_features_per_split exceeds feature count");
    }

    trees_.assign(hp.n_trees, Tree{});
    std::vector<std::vector<bool>> in_bag(hp.n_trees, std::vector<bool>(n, true));

    auto build_tree = [&](int t) {
        SplitMix64 stream(derive_substream_seed(hp.rng_seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> sample;
        sample.reserve(n);
        if (hp.bootstrap) {
            auto& bag = in_bag[t];
            bag.assign(n, false);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t pick = stream.next_u64() % n;
                sample.push_back(pick);
                bag[pick] = true;
            }
        } else {
            sample.resize(n);
            std::iota(sample.begin(), sample.end(), 0);
        }

        Tree& tree = trees_[t];
        // Recursive Gini builder; depth is bounded by max_depth (<= 100).
        auto grow = [&](auto&& self, std::vector<std::size_t> rows, int depth) -> int {
            std::size_t c0 = 0, c1 = 0;
            for (const auto r : rows) (train.labels[r] == 0 ? c0 : c1) += 1;
            const int node_id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(Node{});
            tree.nodes[node_id].label = c1 > c0 ? 1 : 0;
            if (depth >= hp.max_depth || c0 == 0 || c1 == 0 || rows.size() < 2) return node_id;

            // Draw the candidate features without replacement.
            std::vector<std::size_t> pool(width);
            std::iota(pool.begin(), pool.end(), 0);
            std::vector<std::size_t> chosen;
            for (int k = 0; k < hp.max_features_per_split; ++k) {
                const std::size_t j = k + stream.next_u64() % (width - k);
                std::swap(pool[k], pool[j]);
                chosen.push_back(pool[k]);
            }

            double best_gain = 1e-12;
            int best_feature = -1;
            double best_threshold = 0.0;
            const double parent = gini(c0, c1);
            for (const auto f : chosen) {
                std::vector<std::pair<double, int>> vals;
                vals.reserve(rows.size());
                for (const auto r : rows) vals.emplace_back(train.rows[r][f], train.labels[r]);
                std::sort(vals.begin(), vals.end());
                std::size_t l0 = 0, l1 = 0;
                for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                    (vals[i].second == 0 ? l0 : l1) += 1;
                    if (vals[i].first == vals[i + 1].first) continue;
                    const std::size_t nl = i + 1, nr = vals.size() - nl;
                    const double gain =
                        parent - (nl * gini(l0, l1) + nr * gini(c0 - l0, c1 - l1)) /
                                     static_cast<double>(rows.size());
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = static_cast<int>(f);
                        best_threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                    }
                }
            }
            if (best_feature < 0) return node_id;

            std::vector<std::size_t> left, right;
            for (const auto r : rows) {
                (train.rows[r][best_feature] <= best_threshold ? left : right).push_back(r);
            }
            rows.clear();
            rows.shrink_to_fit();
            tree.nodes[node_id].feature = best_feature;
            tree.nodes[node_id].threshold = best_threshold;
            const int left_id = self(self, std::move(left), depth + 1);
            tree.nodes[node_id].left = left_id;
            const int right_id = self(self, std::move(right), depth + 1);
            tree.nodes[node_id].right = right_id;
            return node_id;
        };
        std::vector<std::size_t> root_rows = sample;
        grow(grow, std::move(root_rows), 0);
    };

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= hp.n_trees) return;
            build_tree(t);
        }
    };
    const unsigned n_workers = std::min<unsigned>(
        std::max(1u, std::thread::hardware_concurrency()), static_cast<unsigned>(hp.n_trees));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }

    oob_accuracy_.reset();
    if (hp.bootstrap) {
        std::size_t considered = 0, correct = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t v0 = 0, v1 = 0;
            for (int t = 0; t < hp.n_trees; ++t) {
                if (in_bag[t][i]) continue;
                (predict_tree(trees_[t], train.rows[i]) == 0 ? v0 : v1) += 1;
            }
            if (v0 + v1 == 0) continue;
            ++considered;
            if ((v1 > v0 ? 1 : 0) == train.labels[i]) ++correct;
        }
        if (considered > 0) {
            oob_accuracy_ = static_cast<double>(correct) / static_cast<double>(considered);
        }
    }
}

std::optional<std::pair<int, double>> RandomForest::root_split(std::size_t tree) const {
    const Node& root = trees_.at(tree).nodes.at(0);
    if (root.feature < 0) return std::nullopt;
    return std::make_pair(root.feature, root.threshold);
}

int RandomForest::predict_tree(const Tree& tree, const std::vector<double>& row) const {
    int node = 0;
    while (tree.nodes[node].feature >= 0) {
        const Node& nd = tree.nodes[node];
        node = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return tree.nodes[node].label;
}

int RandomForest::predict_row(const std::vector<double>& row) const {
    std::size_t v0 = 0, v1 = 0;
    for (const auto& tree : trees_) (predict_tree(tree, row) == 0 ? v0 : v1) += 1;
    return v1 > v0 ? 1 : 0;
}

std::vector<int> RandomForest::predict(const LabeledData& data) const {
    std::vector<int> out;
    out.reserve(data.size());
    for (const auto& row : data.rows) out.push_back(predict_row(row));
    return out;
}

double f1_score(const std::vector<int>& predictions, const std::vector<int>& truth) {
    if (predictions.size() != truth.size()) {
        throw LengthMismatch("predictions and truth differ in length");
    }
    if (predictions.empty()) throw LengthMismatch("empty prediction list");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == 1 && truth[i] == 1) ++tp;
        if (predictions[i] == 1 && truth[i] == 0) ++fp;
        if (predictions[i] == 0 && truth[i] == 1) ++fn;
    }
    if (fp == 0 && fn == 0) return 1.0;
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

UtilityReport run_utility_experiment(const CommitCorpus& corpus, const RFHyperparams& hp,
                                     std::uint64_t seed, const UtilityProtocol& protocol) {
    const auto [train_corpus, test_corpus] =
        chronological_split(corpus, protocol.train_fraction);
    if (train_corpus.records.empty() || test_corpus.records.empty()) throw EmptyTrainingSet();

    const LabeledData train_all = extract_features(train_corpus, protocol.feature_names);
    const LabeledData test_raw = extract_features(test_corpus, protocol.feature_names);

    UtilityReport report;
    report.n_runs = protocol.n_runs;
    report.sample_size = protocol.sample_size;
    report.feature_names = protocol.feature_names;
    report.hyperparams = hp;

    const bool test_has0 = std::count(test_raw.labels.begin(), test_raw.labels.end(), 0) > 0;
    const bool test_has1 = std::count(test_raw.labels.begin(), test_raw.labels.end(), 1) > 0;
    report.single_class_test = !(test_has0 && test_has1);

    for (int run = 0; run < protocol.n_runs; ++run) {
        const std::uint64_t run_seed = derive_substream_seed(seed, static_cast<std::uint64_t>(run));
        report.seeds.push_back(run_seed);
        SplitMix64 sampler(derive_substream_seed(run_seed, 0));

        LabeledData sample;
        sample.rows.reserve(protocol.sample_size);
        for (int i = 0; i < protocol.sample_size; ++i) {
            const std::size_t pick = sampler.next_u64() % train_all.size();
            sample.rows.push_back(train_all.rows[pick]);
            sample.labels.push_back(train_all.labels[pick]);
        }

        const std::vector<double> medians = fit_medians(sample);
        impute_median(sample, medians);
        MinMaxScaler scaler;
        scaler.fit(sample);
        scaler.transform(sample);

        LabeledData test = test_raw;
        impute_median(test, medians);
        scaler.transform(test);

        const SmoteEnnResult resampled =
            smote_enn(sample, protocol.k_smote, protocol.k_enn, derive_substream_seed(run_seed, 1));
        if (resampled.degenerate_minority) {
            report.warnings.push_back("run " + std::to_string(run) +
                                      ": minority class too small for SMOTE");
        }
        if (resampled.enn_skipped) {
            report.warnings.push_back("run " + std::to_string(run) +
                                      ": ENN skipped (would empty a class)");
        }

        RFHyperparams run_hp = hp;
        run_hp.rng_seed = derive_substream_seed(run_seed, 2);
        RandomForest forest;
        forest.train(resampled.data, run_hp);

        report.per_run_f1.push_back(f1_score(forest.predict(test), test.labels));
        report.per_run_oob.push_back(forest.oob_accuracy());
    }

    report.mean_f1 =
        std::accumulate(report.per_run_f1.begin(), report.per_run_f1.end(), 0.0) /
        static_cast<double>(report.per_run_f1.size());
    return report;
}

nlohmann::json utility_report_to_json(const UtilityReport& report) {
    nlohmann::json oob = nlohmann::json::array();
    for (const auto& v : report.per_run_oob) {
        if (v.has_value()) {
            oob.push_back(*v);
        } else {
            oob.push_back(nullptr);
        }
    }
    return nlohmann::json{
        {"per_run_f1", report.per_run_f1},
        {"mean_f1", report.mean_f1},
        {"n_runs", report.n_runs},
        {"sample_size", report.sample_size},
        {"seeds", report.seeds},
        {"features", report.feature_names},
        {"hyperparams",
         {{"n_trees", report.hyperparams.n_trees},
          {"max_depth", report.hyperparams.max_depth},
          {"max_features_per_split", report.hyperparams.max_features_per_split},
          {"bootstrap", report.hyperparams.bootstrap},
          {"rng_seed", report.hyperparams.rng_seed}}},
        {"per_run_oob", oob},
        {"single_class_test", report.single_class_test},
        {"warnings", report.warnings},
    };
}

}  // namespace jitanon
