#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "jitanon/corpus.hpp"
#include "jitanon/binning.hpp"
#include "jitanon/paramgen.hpp"
#include "jitanon/rng.hpp"

namespace jitanon {

/// Integer churn from the truncated Gaussian mixture. Each attempt consumes
/// exactly three uniforms (component select, then a Box-Muller pair); after
/// the initial draw and 16 redraws the last value is clamped to the nearer
/// bound (ties toward min). Result always lies in [min_churn, max_churn].
std::int64_t sample_churn(SplitMix64& stream, const ChurnMixture& mixture);

/// Ratio in [0,1] from the Beta distribution.
double sample_ratio(SplitMix64& stream, const RatioBeta& beta);

/// Regenerates la/ld for one commit. A fresh stream is seeded from the
/// commit id alone, so the result is independent of processing order and of
/// every other commit. Draw order is fixed: churn first, then ratio.
/// la' = round(ratio' * churn') (half away from zero), ld' = churn' - la';
/// every other field is left untouched and churn/ratio are re-derived.
CommitRecord anonymize_commit(const CommitRecord& record, const AnonymizationParams& params);

/// Anonymized copy of the whole corpus, row order preserved. Every commit's
/// cluster must have parameters; otherwise MissingParams.
CommitCorpus anonymize_corpus(const CommitCorpus& corpus, const ClusterAssignment& assignment,
                              const std::map<std::string, AnonymizationParams>& params_map);

}  // namespace jitanon
