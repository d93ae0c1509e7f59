#pragma once

#include "loopsim/data.hpp"

namespace loopsim {

/// Column means and population standard deviations. Constant columns get sd 1.
struct Standardizer {
  Vector means;
  Vector sds;

  Matrix transform(const Matrix& x) const;
  Matrix inverse_transform(const Matrix& z) const;
};

Standardizer fit_standardizer(const Matrix& features);

/// y' = standardize(x) . theta + b. The intercept is not penalized.
struct RidgeModel {
  Vector theta;
  double b = 0.0;
  Standardizer standardizer;
  double alpha = 0.0;

  Vector predict(const Matrix& features) const;
};

/// Solves (Z'Z + alpha I) theta = Z'(y - mean(y)) on standardized Z, b = mean(y).
/// Throws SingularSystemError for rank-deficient Z at alpha = 0.
RidgeModel fit_ridge(const Dataset& train, double alpha);

/// Penalized objective ||y - Z theta - b||^2 + alpha ||theta||^2.
double ridge_objective(const RidgeModel& model, const Dataset& train);

}  // namespace loopsim
