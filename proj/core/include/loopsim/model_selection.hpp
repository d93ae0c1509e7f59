#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "loopsim/data.hpp"
#include "loopsim/gbr.hpp"
#include "loopsim/ridge.hpp"

namespace loopsim {

enum class ModelFamily { kRidge, kGbr };

std::string_view family_name(ModelFamily f) noexcept;
ModelFamily parse_family(std::string_view name);

/// Named hyperparameter values in declaration order.
class Hyperparams {
 public:
  Hyperparams() = default;
  Hyperparams(std::initializer_list<std::pair<std::string, double>> values) : values_(values) {}

  void set(const std::string& name, double value);
  std::optional<double> find(std::string_view name) const;
  double get_or(std::string_view name, double fallback) const;

  const std::vector<std::pair<std::string, double>>& items() const noexcept { return values_; }
  bool operator==(const Hyperparams&) const = default;

 private:
  std::vector<std::pair<std::string, double>> values_;
};

/// Candidate lists per hyperparameter. Iteration is lexicographic over the
/// lists in declaration order: the first list varies slowest.
struct HyperGrid {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  int cv_folds = 5;

  std::size_t size() const;
  Hyperparams at(std::size_t index) const;
};

HyperGrid default_ridge_grid();
HyperGrid default_gbr_grid();
HyperGrid default_grid(ModelFamily family);

using Model = std::variant<RidgeModel, GbrModel>;

Vector predict(const Model& model, const Matrix& features);

/// Fits the family's model with the given hyperparameters. Missing GBR
/// hyperparameters fall back to GbrParams defaults; missing ridge alpha is 1.
Model fit_model(ModelFamily family, const Dataset& train, const Hyperparams& hp);

GbrParams gbr_params_from(const Hyperparams& hp);

struct TrainedModel {
  Model model;
  Hyperparams hyperparams;
  double sigma_f2 = 0.0;  // held-out MSE
  double holdout_r2 = 0.0;
  double holdout_mae = 0.0;
};

/// Fold sizes for k folds over n rows: the first n mod k folds get one extra row.
std::vector<std::size_t> fold_sizes(std::size_t n, int folds);

struct CvResult {
  Hyperparams best;
  std::vector<double> mean_scores;  // per grid point, grid iteration order
};

/// k-fold CV on a seeded shuffle, selecting the grid point with the highest
/// mean validation R^2. Ties go to the earliest grid point.
CvResult grid_search_cv(const Dataset& train, const HyperGrid& grid, ModelFamily family,
                        std::uint64_t seed);

/// Fits on `train` and scores on `holdout`; sigma_f2 is the held-out MSE.
TrainedModel train_and_evaluate(const Dataset& train, const Dataset& holdout, ModelFamily family,
                                const Hyperparams& hp);

}  // namespace loopsim
