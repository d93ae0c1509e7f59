#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "loopsim/data.hpp"

// Independent reference implementations shared by the unit and acceptance tests.
namespace loopsim::oracles {

// Oracle: minimize ||y - Z theta - b||^2 + alpha ||theta||^2 by plain gradient
// descent on (theta, b), where Z is standardized here with its own arithmetic.
struct GdSolution {
  std::vector<double> theta;
  double b = 0.0;
};

inline GdSolution gradient_descent_ridge(const Dataset& ds, double alpha) {
  const std::size_t n = ds.rows(), d = ds.cols();
  std::vector<std::vector<double>> z(n, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - mean;
      var += c * c;
    }
    const double sd = var > 0 ? std::sqrt(var / static_cast<double>(n)) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i][j] = (ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - mean) / sd;
    }
  }

  // Lipschitz constant of the gradient by power iteration on the Hessian
  // H = 2 [Z'Z + alpha I, Z'1; 1'Z, n].
  const auto hessian_times = [&](const std::vector<double>& v) {
    std::vector<double> out(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double zi = v[d];
      for (std::size_t j = 0; j < d; ++j) zi += z[i][j] * v[j];
      for (std::size_t j = 0; j < d; ++j) out[j] += 2.0 * z[i][j] * zi;
      out[d] += 2.0 * zi;
    }
    for (std::size_t j = 0; j < d; ++j) out[j] += 2.0 * alpha * v[j];
    return out;
  };
  std::vector<double> v(d + 1, 1.0);
  double lipschitz = 0.0;
  for (int it = 0; it < 500; ++it) {
    const std::vector<double> hv = hessian_times(v);
    double norm = 0.0;
    for (double x : hv) norm += x * x;
    norm = std::sqrt(norm);
    lipschitz = norm;
    for (std::size_t k = 0; k <= d; ++k) v[k] = hv[k] / norm;
  }
  const double step = 1.0 / (1.05 * lipschitz);

  GdSolution s{std::vector<double>(d, 0.0), 0.0};
  for (int it = 0; it < 400000; ++it) {
    std::vector<double> grad(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double r = s.b - ds.targets[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < d; ++j) r += z[i][j] * s.theta[j];
      for (std::size_t j = 0; j < d; ++j) grad[j] += 2.0 * r * z[i][j];
      grad[d] += 2.0 * r;
    }
    double gnorm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] += 2.0 * alpha * s.theta[j];
      gnorm += grad[j] * grad[j];
    }
    gnorm += grad[d] * grad[d];
    if (std::sqrt(gnorm) < 1e-11) break;
    for (std::size_t j = 0; j < d; ++j) s.theta[j] -= step * grad[j];
    s.b -= step * grad[d];
  }
  return s;
}

using Rows = std::vector<std::size_t>;

// Independent oracle arithmetic: sort-based median and absolute deviation.
inline double oracle_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double oracle_cost(const Dataset& ds, const Rows& rows) {
  if (rows.empty()) return 0.0;
  std::vector<double> v;
  for (std::size_t r : rows) v.push_back(ds.targets[static_cast<Eigen::Index>(r)]);
  const double m = oracle_median(v);
  double s = 0.0;
  for (double y : v) s += std::abs(y - m);
  return s;
}

struct Candidate {
  int feature;
  double threshold;
};

inline std::vector<Candidate> candidates(const Dataset& ds, const Rows& rows) {
  std::vector<Candidate> out;
  for (Eigen::Index f = 0; f < ds.features.cols(); ++f) {
    std::vector<double> v;
    for (std::size_t r : rows) v.push_back(ds.features(static_cast<Eigen::Index>(r), f));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) out.push_back({static_cast<int>(f), 0.5 * (v[i - 1] + v[i])});
  }
  return out;
}

inline void partition(const Dataset& ds, const Rows& rows, const Candidate& c, Rows& left, Rows& right) {
  left.clear();
  right.clear();
  for (std::size_t r : rows) {
    (ds.features(static_cast<Eigen::Index>(r), c.feature) <= c.threshold ? left : right).push_back(r);
  }
}

// Exhaustive optimum over all trees of depth <= depth with leaves >= min_leaf.
inline double exhaustive_optimum(const Dataset& ds, const Rows& rows, int depth, std::size_t min_leaf) {
  double best = oracle_cost(ds, rows);
  if (depth == 0 || rows.size() < 2 * min_leaf) return best;
  Rows left, right;
  for (const Candidate& c : candidates(ds, rows)) {
    partition(ds, rows, c, left, right);
    if (left.size() < min_leaf || right.size() < min_leaf) continue;
    const Rows l = left, r = right;
    best = std::min(best, exhaustive_optimum(ds, l, depth - 1, min_leaf) +
                              exhaustive_optimum(ds, r, depth - 1, min_leaf));
  }
  return best;
}

inline Rows all_rows(const Dataset& ds) {
  Rows r(ds.rows());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
  return r;
}

}  // namespace loopsim::oracles
