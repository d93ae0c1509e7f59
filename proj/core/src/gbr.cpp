#include "loopsim/gbr.hpp"

#include <algorithm>
#include <cmath>

#include "loopsim/errors.hpp"
#include "loopsim/stats.hpp"

namespace loopsim {

Vector GbrModel::predict(const Matrix& features) const { return predict(features, trees.size()); }

Vector GbrModel::predict(const Matrix& features, std::size_t n_trees) const {
  if (n_trees > trees.size()) throw ContractViolation("gbr predict: more stages requested than trees");
  if (static_cast<std::size_t>(features.cols()) != n_features) {
    throw ContractViolation("gbr predict: expected " + std::to_string(n_features) + " columns, got " +
                            std::to_string(features.cols()));
  }
  Vector out = Vector::Constant(features.rows(), initial_value);
  for (std::size_t t = 0; t < n_trees; ++t) {
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
      out[r] += learning_rate * trees[t].predict_row(features.row(r).data());
    }
  }
  return out;
}

double huber_loss(std::span<const double> residuals, double delta) {
  if (residuals.empty()) return 0.0;
  double acc = 0.0;
  for (double r : residuals) {
    const double a = std::abs(r);
    acc += a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
  }
  return acc / static_cast<double>(residuals.size());
}

double huber_location(std::span<const double> residuals, double delta) {
  if (residuals.empty()) throw ContractViolation("huber_location of an empty sample");
  if (!(delta > 0.0)) return median(residuals);
  // psi(c) = sum clip(r - c, delta) is non-increasing in c; bisect for its root.
  const auto psi = [&](double c) {
    double acc = 0.0;
    for (double r : residuals) acc += std::clamp(r - c, -delta, delta);
    return acc;
  };
  const auto [lo_it, hi_it] = std::minmax_element(residuals.begin(), residuals.end());
  double lo = *lo_it;
  double hi = *hi_it;
  for (int it = 0; it < 200 && lo < hi; ++it) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    const double v = psi(mid);
    if (v > 0.0) {
      lo = mid;
    } else if (v < 0.0) {
      hi = mid;
    } else {
      return mid;
    }
  }
  return lo + (hi - lo) / 2.0;
}

GbrModel fit_gbr(const Dataset& train, const GbrParams& params) {
  if (params.n_estimators < 0) throw ContractViolation("fit_gbr: n_estimators must be non-negative");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw ContractViolation("fit_gbr: learning_rate must be in (0, 1]");
  }
  if (!(params.huber_delta_quantile > 0.0 && params.huber_delta_quantile < 1.0)) {
    throw ContractViolation("fit_gbr: huber_delta_quantile must be in (0, 1)");
  }
  const std::size_t n = train.rows();
  if (n == 0) throw ContractViolation("fit_gbr: empty training set");

  GbrModel model;
  model.learning_rate = params.learning_rate;
  model.huber_delta_quantile = params.huber_delta_quantile;
  model.n_estimators = params.n_estimators;
  model.n_features = train.cols();
  const std::span<const double> y(train.targets.data(), n);
  model.initial_value = median(y);
  if (params.n_estimators == 0) return model;

  const TreeParams tp{params.max_depth, params.min_samples_leaf};
  TreeBuilder builder(train.features);
  std::vector<double> pred(n, model.initial_value);
  std::vector<double> resid(n), abs_resid(n), pseudo(n), leaf_resid;
  model.trees.reserve(static_cast<std::size_t>(params.n_estimators));
  model.trace.reserve(static_cast<std::size_t>(params.n_estimators));

  for (int k = 0; k < params.n_estimators; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = y[i] - pred[i];
      abs_resid[i] = std::abs(resid[i]);
    }
    const double delta = quantile(abs_resid, params.huber_delta_quantile);
    for (std::size_t i = 0; i < n; ++i) pseudo[i] = std::clamp(resid[i], -delta, delta);

    RegressionTree tree = builder.fit(pseudo, tp);
    const double before = huber_loss(resid, delta);

    // The split structure comes from the clipped residuals; leaf values are
    // the Huber-optimal shift of the raw residuals in each leaf.
    const auto& leaves = builder.leaf_rows();
    auto& nodes = tree.mutable_nodes();
    for (std::size_t node = 0; node < nodes.size(); ++node) {
      if (!nodes[node].is_leaf()) continue;
      leaf_resid.clear();
      for (std::size_t r : leaves[node]) leaf_resid.push_back(resid[r]);
      const double value = huber_location(leaf_resid, delta);
      nodes[node].value = value;
      for (std::size_t r : leaves[node]) pred[r] += params.learning_rate * value;
    }

    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - pred[i];
    const double after = huber_loss(resid, delta);
    if (after > before + 1e-12 * std::max(1.0, before)) {
      throw InternalError("fit_gbr: training Huber loss rose at iteration " + std::to_string(k) +
                          " (" + std::to_string(before) + " -> " + std::to_string(after) + ")");
    }
    model.trace.push_back({delta, before, after});
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace loopsim
