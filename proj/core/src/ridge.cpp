#include "loopsim/ridge.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "loopsim/errors.hpp"

namespace loopsim {

Matrix Standardizer::transform(const Matrix& x) const {
  if (x.cols() != means.size()) throw ContractViolation("standardize: column count mismatch");
  Matrix z = x;
  z.rowwise() -= means.transpose();
  z.array().rowwise() /= sds.transpose().array();
  return z;
}

Matrix Standardizer::inverse_transform(const Matrix& z) const {
  Matrix x = z;
  x.array().rowwise() *= sds.transpose().array();
  x.rowwise() += means.transpose();
  return x;
}

Standardizer fit_standardizer(const Matrix& features) {
  if (features.rows() < 2) throw ContractViolation("fit_standardizer: need at least 2 rows");
  Standardizer s;
  const double n = static_cast<double>(features.rows());
  s.means = features.colwise().sum().transpose() / n;
  s.sds.resize(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - s.means[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    s.sds[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Vector RidgeModel::predict(const Matrix& features) const {
  if (features.cols() != theta.size()) {
    throw ContractViolation("ridge predict: expected " + std::to_string(theta.size()) +
                            " columns, got " + std::to_string(features.cols()));
  }
  Vector out = standardizer.transform(features) * theta;
  out.array() += b;
  return out;
}

RidgeModel fit_ridge(const Dataset& train, double alpha) {
  if (!(alpha >= 0.0)) throw ContractViolation("fit_ridge: alpha must be non-negative");
  const auto d = static_cast<Eigen::Index>(train.cols());
  if (train.rows() < train.cols() + 1) {
    throw ContractViolation("fit_ridge: need at least d + 1 rows");
  }
  RidgeModel m;
  m.alpha = alpha;
  m.standardizer = fit_standardizer(train.features);
  const Matrix z = m.standardizer.transform(train.features);
  m.b = train.targets.mean();
  const Vector yc = train.targets.array() - m.b;

  Eigen::MatrixXd gram = z.transpose() * z;
  gram.diagonal().array() += alpha;
  const Eigen::VectorXd rhs = z.transpose() * yc;

  if (alpha == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rank() < d) {
      throw SingularSystemError("fit_ridge: normal equations are singular at alpha = 0 (rank " +
                                std::to_string(lu.rank()) + " < " + std::to_string(d) + ")");
    }
    m.theta = lu.solve(rhs);
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw InternalError("fit_ridge: Cholesky failed for alpha > 0");
    m.theta = llt.solve(rhs);
  }
  return m;
}

double ridge_objective(const RidgeModel& model, const Dataset& train) {
  const Vector resid = train.targets - model.predict(train.features);
  return resid.squaredNorm() + model.alpha * model.theta.squaredNorm();
}

}  // namespace loopsim
