#include "loopsim/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "loopsim/errors.hpp"
#include "loopsim/metrics.hpp"
#include "loopsim/random.hpp"

namespace loopsim {

std::string_view family_name(ModelFamily f) noexcept {
  return f == ModelFamily::kRidge ? "ridge" : "gbr";
}

ModelFamily parse_family(std::string_view name) {
  if (name == "ridge") return ModelFamily::kRidge;
  if (name == "gbr") return ModelFamily::kGbr;
  throw ContractViolation("unknown model family '" + std::string(name) + "' (expected ridge or gbr)");
}

void Hyperparams::set(const std::string& name, double value) {
  for (auto& [k, v] : values_) {
    if (k == name) {
      v = value;
      return;
    }
  }
  values_.emplace_back(name, value);
}

std::optional<double> Hyperparams::find(std::string_view name) const {
  for (const auto& [k, v] : values_) {
    if (k == name) return v;
  }
  return std::nullopt;
}

double Hyperparams::get_or(std::string_view name, double fallback) const {
  return find(name).value_or(fallback);
}

std::size_t HyperGrid::size() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.second.size();
  return n;
}

Hyperparams HyperGrid::at(std::size_t index) const {
  if (index >= size()) throw ContractViolation("grid index out of range");
  std::vector<std::size_t> digits(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    const std::size_t radix = axes[a].second.size();
    digits[a] = index % radix;
    index /= radix;
  }
  Hyperparams hp;
  for (std::size_t a = 0; a < axes.size(); ++a) hp.set(axes[a].first, axes[a].second[digits[a]]);
  return hp;
}

HyperGrid default_ridge_grid() {
  return HyperGrid{{{"alpha", {0.01, 0.1, 1.0, 10.0, 100.0}}}, 5};
}

HyperGrid default_gbr_grid() {
  return HyperGrid{{{"n_estimators", {50, 100}},
                    {"max_depth", {2, 3}},
                    {"learning_rate", {0.05, 0.1}},
                    {"huber_delta_quantile", {0.9}},
                    {"min_samples_leaf", {5}}},
                   5};
}

HyperGrid default_grid(ModelFamily family) {
  return family == ModelFamily::kRidge ? default_ridge_grid() : default_gbr_grid();
}

Vector predict(const Model& model, const Matrix& features) {
  return std::visit([&](const auto& m) { return m.predict(features); }, model);
}

GbrParams gbr_params_from(const Hyperparams& hp) {
  GbrParams p;
  p.n_estimators = static_cast<int>(std::lround(hp.get_or("n_estimators", p.n_estimators)));
  p.learning_rate = hp.get_or("learning_rate", p.learning_rate);
  p.max_depth = static_cast<int>(std::lround(hp.get_or("max_depth", p.max_depth)));
  p.min_samples_leaf = static_cast<std::size_t>(
      std::lround(hp.get_or("min_samples_leaf", static_cast<double>(p.min_samples_leaf))));
  p.huber_delta_quantile = hp.get_or("huber_delta_quantile", p.huber_delta_quantile);
  return p;
}

Model fit_model(ModelFamily family, const Dataset& train, const Hyperparams& hp) {
  if (family == ModelFamily::kRidge) return fit_ridge(train, hp.get_or("alpha", 1.0));
  return fit_gbr(train, gbr_params_from(hp));
}

std::vector<std::size_t> fold_sizes(std::size_t n, int folds) {
  if (folds < 2) throw ContractViolation("cv_folds must be at least 2");
  const auto k = static_cast<std::size_t>(folds);
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) ++sizes[i];
  return sizes;
}

CvResult grid_search_cv(const Dataset& train, const HyperGrid& grid, ModelFamily family,
                        std::uint64_t seed) {
  const std::size_t points = grid.size();
  if (points == 0) throw ContractViolation("grid_search_cv: empty hyperparameter grid");
  const std::size_t n = train.rows();
  if (n < 2 * static_cast<std::size_t>(std::max(grid.cv_folds, 2))) {
    throw ContractViolation("grid_search_cv: need at least 2 rows per fold");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RandomEngine rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  struct Fold {
    Dataset fit;
    Dataset valid;
  };
  std::vector<Fold> folds;
  std::size_t begin = 0;
  for (std::size_t size : fold_sizes(n, grid.cv_folds)) {
    std::vector<std::size_t> valid(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                   order.begin() + static_cast<std::ptrdiff_t>(begin + size));
    std::vector<std::size_t> fit;
    fit.reserve(n - size);
    fit.insert(fit.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(begin));
    fit.insert(fit.end(), order.begin() + static_cast<std::ptrdiff_t>(begin + size), order.end());
    std::sort(valid.begin(), valid.end());
    std::sort(fit.begin(), fit.end());
    folds.push_back({train.select(fit), train.select(valid)});
    begin += size;
  }

  // Boosted models differing only in n_estimators share one fit per fold:
  // the shorter ensemble is a prefix of the longer one.
  std::vector<Hyperparams> hps;
  std::vector<std::size_t> share_group(points);
  std::vector<Hyperparams> group_fit;  // hyperparameters actually fitted per group
  for (std::size_t g = 0; g < points; ++g) {
    hps.push_back(grid.at(g));
    if (family != ModelFamily::kGbr) {
      share_group[g] = group_fit.size();
      group_fit.push_back(hps[g]);
      continue;
    }
    Hyperparams key;
    for (const auto& [name, value] : hps[g].items()) {
      if (name != "n_estimators") key.set(name, value);
    }
    const double trees = hps[g].get_or("n_estimators", GbrParams{}.n_estimators);
    std::size_t j = 0;
    for (; j < group_fit.size(); ++j) {
      Hyperparams other;
      for (const auto& [name, value] : group_fit[j].items()) {
        if (name != "n_estimators") other.set(name, value);
      }
      if (other == key) break;
    }
    if (j == group_fit.size()) {
      group_fit.push_back(hps[g]);
      group_fit.back().set("n_estimators", trees);
    } else if (trees > group_fit[j].get_or("n_estimators", GbrParams{}.n_estimators)) {
      group_fit[j].set("n_estimators", trees);
    }
    share_group[g] = j;
  }

  std::vector<double> totals(points, 0.0);
  for (const Fold& f : folds) {
    std::vector<std::optional<Model>> fitted(group_fit.size());
    const std::span<const double> yt(f.valid.targets.data(), f.valid.rows());
    for (std::size_t g = 0; g < points; ++g) {
      auto& m = fitted[share_group[g]];
      if (!m) m = fit_model(family, f.fit, group_fit[share_group[g]]);
      Vector pred;
      if (const auto* gbr = std::get_if<GbrModel>(&*m)) {
        const auto stages = static_cast<std::size_t>(std::lround(hps[g].get_or("n_estimators", GbrParams{}.n_estimators)));
        pred = gbr->predict(f.valid.features, stages);
      } else {
        pred = predict(*m, f.valid.features);
      }
      totals[g] += r2(yt, {pred.data(), f.valid.rows()});
    }
  }

  CvResult result;
  result.mean_scores.reserve(points);
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < points; ++g) {
    const double score = totals[g] / static_cast<double>(folds.size());
    result.mean_scores.push_back(score);
    if (g == 0 || score > best_score) {
      best_score = score;
      result.best = hps[g];
    }
  }
  return result;
}

TrainedModel train_and_evaluate(const Dataset& train, const Dataset& holdout, ModelFamily family,
                                const Hyperparams& hp) {
  if (holdout.rows() == 0) throw ContractViolation("train_and_evaluate: empty holdout");
  TrainedModel t{fit_model(family, train, hp), hp, 0.0, 0.0, 0.0};
  const Vector pred = predict(t.model, holdout.features);
  const std::span<const double> yt(holdout.targets.data(), holdout.rows());
  const std::span<const double> yp(pred.data(), holdout.rows());
  t.sigma_f2 = mse(yt, yp);
  t.holdout_mae = mae(yt, yp);
  t.holdout_r2 = r2(yt, yp);
  return t;
}

}  // namespace loopsim
