#include "jitanon/regen.hpp"

#include <cmath>

#include "jitanon/errors.hpp"

namespace jitanon {
namespace {

constexpr int kMaxRedraws = 16;

std::int64_t draw_once(SplitMix64& stream, const ChurnMixture& mixture) {
    const double u = stream.next_uniform();
    double cumulative = 0.0;
    const MixtureComponent* chosen = &mixture.components.back();
    for (const auto& c : mixture.components) {
        cumulative += c.weight;
        if (u < cumulative) {
            chosen = &c;
            break;
        }
    }
    const double z = sample_normal(stream);
    return std::llround(chosen->mean + chosen->std_dev * z);
}

}  // namespace

std::int64_t sample_churn(SplitMix64& stream, const ChurnMixture& mixture) {
    std::int64_t value = draw_once(stream, mixture);
    for (int redraw = 0; redraw < kMaxRedraws; ++redraw) {
        if (value >= mixture.min_churn && value <= mixture.max_churn) return value;
        value = draw_once(stream, mixture);
    }
    if (value < mixture.min_churn || value > mixture.max_churn) {
        const auto below = value < mixture.min_churn ? mixture.min_churn - value : value - mixture.min_churn;
        const auto above = value > mixture.max_churn ? value - mixture.max_churn : mixture.max_churn - value;
        value = below <= above ? mixture.min_churn : mixture.max_churn;
    }
    return value;
}

double sample_ratio(SplitMix64& stream, const RatioBeta& beta) {
    return sample_beta(stream, beta.alpha, beta.beta);
}

CommitRecord anonymize_commit(const CommitRecord& record, const AnonymizationParams& params) {
    SplitMix64 stream(derive_seed(record.commit_id));
    const std::int64_t churn = sample_churn(stream, params.churn_mixture);
    const double ratio = sample_ratio(stream, params.ratio_beta);

    CommitRecord out = record;
    out.la = std::llround(ratio * static_cast<double>(churn));
    out.ld = churn - out.la;
    out.churn = out.la + out.ld;
    out.ratio = out.churn > 0 ? static_cast<double>(out.la) / static_cast<double>(out.churn) : 0.0;
    return out;
}

CommitCorpus anonymize_corpus(const CommitCorpus& corpus, const ClusterAssignment& assignment,
                              const std::map<std::string, AnonymizationParams>& params_map) {
    CommitCorpus out;
    out.source_name = corpus.source_name;
    out.column_manifest = corpus.column_manifest;
    out.records.reserve(corpus.records.size());
    for (const auto& record : corpus.records) {
        const auto key_it = assignment.by_commit.find(record.commit_id);
        if (key_it == assignment.by_commit.end()) throw MissingParams(record.commit_id);
        const std::string label = key_it->second.str();
        const auto params_it = params_map.find(label);
        if (params_it == params_map.end()) throw MissingParams(label);
        out.records.push_back(anonymize_commit(record, params_it->second));
    }
    return out;
}

}  // namespace jitanon
