#pragma once

#include <cstdint>
#include <string_view>

namespace jitanon {

/// FNV-1a, 64-bit, over raw bytes. offset 0xcbf29ce484222325, prime
/// 0x100000001b3.
std::uint64_t fnv1a64(std::string_view bytes);

/// The splitmix64 output mixer (no state increment). Used both inside the
/// stream and as a standalone finalizer when deriving seeds.
constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from (parent seed, index). Defined as
/// splitmix64_finalize(parent + GAMMA * (index + 1)) so substreams are stable
/// regardless of evaluation order.
constexpr std::uint64_t derive_substream_seed(std::uint64_t parent, std::uint64_t index) {
    return splitmix64_finalize(parent + 0x9E3779B97F4A7C15ULL * (index + 1));
}

/// Per-commit seed: FNV-1a 64 over the UTF-8 bytes of the id, then one
/// splitmix64 finalization step. Throws EmptyCommitId on "".
std::uint64_t derive_seed(std::string_view commit_id);

/// Deterministic 64-bit stream (splitmix64). Uniforms take the top 53 bits
/// of each word, giving values in [0,1) on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        return splitmix64_finalize(z);
    }

    /// Uniform in [0,1): (word >> 11) * 2^-53.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// Standard normal via Box-Muller. Consumes exactly two uniforms u1, u2 and
/// returns the first member of the pair: sqrt(-2 ln(1-u1)) * cos(2 pi u2).
/// The sin branch is never used, so one normal always costs two uniforms.
double sample_normal(SplitMix64& stream);

/// Gamma(shape, 1) via Marsaglia-Tsang squeeze with Box-Muller normals.
/// For shape < 1 draws Gamma(shape+1) and applies the u^(1/shape) boost,
/// with the boost uniform drawn after the Gamma(shape+1) draws.
double sample_gamma(SplitMix64& stream, double shape);

/// Beta(alpha, beta) as g1/(g1+g2) from two Gamma draws, alpha first.
/// Returns 0.5 in the (measure-zero) case g1 + g2 == 0.
double sample_beta(SplitMix64& stream, double alpha, double beta);

}  // namespace jitanon
