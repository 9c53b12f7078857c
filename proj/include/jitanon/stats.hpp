#pragma once

#include <span>
#include <vector>

namespace jitanon {

/// Quantile of a sorted sample with linear interpolation between order
/// statistics: position h = (n-1)*p, value = x[floor(h)] + frac(h) *
/// (x[floor(h)+1] - x[floor(h)]). This single convention is used for bin
/// edges, cluster summaries and attacker binning.
double quantile_sorted(std::span<const double> sorted_values, double p);

/// Convenience: sorts a copy, then evaluates each probability.
std::vector<double> quantiles(std::vector<double> values, std::span<const double> probs);

}  // namespace jitanon
