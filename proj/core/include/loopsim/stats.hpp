#pragma once

#include <span>
#include <vector>

namespace loopsim {

/// Midpoint of the two middle values for even sizes.
double median(std::span<const double> values);

/// Quantile with linear interpolation between order statistics
/// (the "type 7" rule). q in [0, 1].
double quantile(std::span<const double> values, double q);

/// Ranks starting at 1, ties receive the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation. Returns 0 when either side has no spread.
double spearman(std::span<const double> x, std::span<const double> y);

/// Population standard deviation.
double stddev(std::span<const double> values);

}  // namespace loopsim
