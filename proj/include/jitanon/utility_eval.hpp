#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "jitanon/corpus.hpp"
#include "jitanon/rng.hpp"

namespace jitanon {

/// Dense feature matrix with binary labels (1 = buggy). Missing QID values
/// are NaN until impute_median fills them.
struct LabeledData {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;

    std::size_t size() const { return rows.size(); }
};

/// Default classifier features: the ten QIDs in canonical order, then la, ld.
std::vector<std::string> default_feature_names();

/// Extracts the named features; unknown names throw ConfigError. Missing
/// QIDs become NaN.
LabeledData extract_features(const CommitCorpus& corpus,
                             const std::vector<std::string>& feature_names);

/// Per-feature medians over non-NaN entries (0.0 when a feature is all-NaN),
/// as fitted on a training sample.
std::vector<double> fit_medians(const LabeledData& train);
void impute_median(LabeledData& data, const std::vector<double>& medians);

/// Min-max scaler fitted on the training sample only; constant features map
/// to 0. Test values may leave [0,1] — they are not clamped.
struct MinMaxScaler {
    std::vector<double> lo, hi;

    void fit(const LabeledData& train);
    void transform(LabeledData& data) const;
};

struct SmoteEnnResult {
    LabeledData data;
    bool degenerate_minority = false;  // SMOTE skipped (<2 minority rows)
    bool enn_skipped = false;          // ENN would have emptied a class
};

/// SMOTE to exact class balance (convex steps toward one of k_smote minority
/// neighbors, Euclidean on the given — already scaled — features), then ENN
/// removal of points whose k_enn nearest neighbors' majority label disagrees.
/// Removal is simultaneous; ties in neighbor distance break by row index.
SmoteEnnResult smote_enn(const LabeledData& train, int k_smote, int k_enn, std::uint64_t seed);

struct RFHyperparams {
    int n_trees = 1400;
    int max_depth = 100;
    int max_features_per_split = 1;
    bool bootstrap = true;
    std::uint64_t rng_seed = 0;
};

/// From-scratch random forest: Gini splits over max_features_per_split
/// uniformly drawn features per node, majority leaves and votes with ties
/// toward class 0. Per-tree seeds come from derive_substream_seed(rng_seed,
/// tree), so concurrent training cannot change the model.
class RandomForest {
public:
    void train(const LabeledData& train, const RFHyperparams& hp);

    int predict_row(const std::vector<double>& row) const;
    std::vector<int> predict(const LabeledData& data) const;

    /// Out-of-bag accuracy over rows left out by at least one tree; nullopt
    /// without bootstrap (every row is always in-bag).
    std::optional<double> oob_accuracy() const { return oob_accuracy_; }

    std::size_t tree_count() const { return trees_.size(); }

    /// (feature, threshold) at one tree's root; nullopt when the root is a
    /// leaf. Lets stump-level tests pin split selection against a
    /// brute-force Gini scan.
    std::optional<std::pair<int, double>> root_split(std::size_t tree) const;

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        int label = 0;
    };
    struct Tree {
        std::vector<Node> nodes;
    };

    int predict_tree(const Tree& tree, const std::vector<double>& row) const;

    std::vector<Tree> trees_;
    std::optional<double> oob_accuracy_;
};

/// F1 of the positive class. FP = FN = 0 gives 1.0 (perfection, even without
/// positives); otherwise TP = 0 gives 0.0. Throws LengthMismatch.
double f1_score(const std::vector<int>& predictions, const std::vector<int>& truth);

struct UtilityProtocol {
    int n_runs = 5;
    int sample_size = 500;
    double train_fraction = 0.8;
    int k_smote = 5;
    int k_enn = 3;
    std::vector<std::string> feature_names = default_feature_names();
};

struct UtilityReport {
    std::vector<double> per_run_f1;
    double mean_f1 = 0.0;
    int n_runs = 0;
    int sample_size = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> feature_names;
    RFHyperparams hyperparams;
    std::vector<std::optional<double>> per_run_oob;
    bool single_class_test = false;
    std::vector<std::string> warnings;
};

/// The evaluation harness: chronological 80/20 split, then for each run
/// draw sample_size training commits with replacement, impute + scale (fit
/// on the sample only), SMOTEENN, train the forest, and score F1 on the
/// untouched test split.
UtilityReport run_utility_experiment(const CommitCorpus& corpus, const RFHyperparams& hp,
                                     std::uint64_t seed, const UtilityProtocol& protocol = {});

nlohmann::json utility_report_to_json(const UtilityReport& report);

}  // namespace jitanon
