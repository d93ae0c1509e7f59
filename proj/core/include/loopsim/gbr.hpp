#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "loopsim/data.hpp"
#include "loopsim/tree.hpp"

namespace loopsim {

struct GbrParams {
  int n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  std::size_t min_samples_leaf = 5;
  double huber_delta_quantile = 0.9;
};

/// Training Huber loss of one boosting iteration, measured at that
/// iteration's delta before and after the tree is added.
struct BoostingStep {
  double delta = 0.0;
  double loss_before = 0.0;
  double loss_after = 0.0;
};

/// prediction = initial_value + learning_rate * sum of tree outputs.
struct GbrModel {
  double initial_value = 0.0;
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double huber_delta_quantile = 0.9;
  int n_estimators = 0;
  std::size_t n_features = 0;
  std::vector<BoostingStep> trace;

  Vector predict(const Matrix& features) const;

  /// Prediction of the model's first `n_trees` trees, which is exactly the
  /// model fit_gbr returns for n_estimators = n_trees with the same data.
  Vector predict(const Matrix& features, std::size_t n_trees) const;
};

/// Mean Huber loss of `residuals` with transition point `delta`.
double huber_loss(std::span<const double> residuals, double delta);

/// Location c minimizing sum huber(r_i - c). Falls back to the median when delta is 0.
double huber_location(std::span<const double> residuals, double delta);

/// Gradient boosting with Huber loss. Each iteration re-estimates delta as the
/// huber_delta_quantile of |residuals|, grows an MAE-split tree on the clipped
/// residuals, then sets every leaf to the Huber-optimal shift of the raw
/// residuals it holds. Throws InternalError if an iteration raises the loss.
GbrModel fit_gbr(const Dataset& train, const GbrParams& params);

}  // namespace loopsim
