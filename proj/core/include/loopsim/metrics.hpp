#pragma once

#include <span>
#include <string_view>

namespace loopsim {

// All metrics are evaluated in log-price space.

/// Coefficient of determination, 1 - SS_res / SS_tot.
/// Throws ZeroVarianceError when every y_true is identical.
double r2(std::span<const double> y_true, std::span<const double> y_pred);

double mae(std::span<const double> y_true, std::span<const double> y_pred);

double mse(std::span<const double> y_true, std::span<const double> y_pred);

enum class Metric { kR2, kMae, kMse };

std::string_view metric_name(Metric m) noexcept;

double evaluate(Metric m, std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace loopsim
