#include "jitanon/rng.hpp"

#include <cmath>
#include <numbers>

#include "jitanon/errors.hpp"

namespace jitanon {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::string_view commit_id) {
    if (commit_id.empty()) throw EmptyCommitId();
    return splitmix64_finalize(fnv1a64(commit_id));
}

double sample_normal(SplitMix64& stream) {
    const double u1 = stream.next_uniform();
    const double u2 = stream.next_uniform();
    // 1-u1 is in (0,1], so the log is finite.
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_gamma(SplitMix64& stream, double shape) {
    if (shape < 1.0) {
        const double g = sample_gamma(stream, shape + 1.0);
        const double u = stream.next_uniform();
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = sample_normal(stream);
        const double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        const double u = stream.next_uniform();
        if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        if (u == 0.0) return d * v;  // log(0) squeeze is vacuously passed
    }
}

double sample_beta(SplitMix64& stream, double alpha, double beta) {
    const double g1 = sample_gamma(stream, alpha);
    const double g2 = sample_gamma(stream, beta);
    const double sum = g1 + g2;
    if (sum == 0.0) return 0.5;
    return g1 / sum;
}

}  // namespace jitanon
