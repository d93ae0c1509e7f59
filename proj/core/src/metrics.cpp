#include "loopsim/metrics.hpp"

#include <cmath>

#include "loopsim/errors.hpp"

namespace loopsim {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size()) throw ContractViolation(std::string(who) + ": length mismatch");
  if (a.empty()) throw ContractViolation(std::string(who) + ": empty input");
}

}  // namespace

double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred, "r2");
  const double n = static_cast<double>(y_true.size());
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= n;
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  }
  if (ss_tot == 0.0) throw ZeroVarianceError("r2: all true values are identical");
  return 1.0 - ss_res / ss_tot;
}

double mae(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred, "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) acc += std::abs(y_true[i] - y_pred[i]);
  return acc / static_cast<double>(y_true.size());
}

double mse(std::span<const double> y_true, std::span<const double> y_pred) {
  check_lengths(y_true, y_pred, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    acc += r * r;
  }
  return acc / static_cast<double>(y_true.size());
}

std::string_view metric_name(Metric m) noexcept {
  switch (m) {
    case Metric::kR2: return "r2";
    case Metric::kMae: return "mae";
    case Metric::kMse: return "mse";
  }
  return "?";
}

double evaluate(Metric m, std::span<const double> y_true, std::span<const double> y_pred) {
  switch (m) {
    case Metric::kR2: return r2(y_true, y_pred);
    case Metric::kMae: return mae(y_true, y_pred);
    case Metric::kMse: return mse(y_true, y_pred);
  }
  throw ContractViolation("unknown metric");
}

}  // namespace loopsim
