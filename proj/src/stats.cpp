#include "jitanon/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jitanon {

double quantile_sorted(std::span<const double> sorted_values, double p) {
    if (sorted_values.empty()) throw std::invalid_argument("quantile of empty sample");
    if (p <= 0.0) return sorted_values.front();
    if (p >= 1.0) return sorted_values.back();
    const double h = static_cast<double>(sorted_values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 >= sorted_values.size()) return sorted_values[lo];
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::vector<double> quantiles(std::vector<double> values, std::span<const double> probs) {
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    out.reserve(probs.size());
    for (double p : probs) out.push_back(quantile_sorted(values, p));
    return out;
}

}  // namespace jitanon
