#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "loopsim/data.hpp"

namespace loopsim::testing {

/// Dataset from an explicit table; row ids are 0..n-1.
inline Dataset make_dataset(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  Dataset ds;
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto d = static_cast<Eigen::Index>(x.empty() ? 0 : x.front().size());
  ds.features.resize(n, d);
  ds.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) ds.features(i, j) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    ds.targets[i] = y[static_cast<std::size_t>(i)];
    ds.row_ids.push_back(i);
  }
  return ds;
}

/// Gaussian regression problem generated independently of loopsim::synthesize.
inline Dataset random_linear(std::size_t n, std::size_t d, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> beta(d);
  for (double& b : beta) b = normal(rng);
  std::vector<std::vector<double>> x(n, std::vector<double>(d));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.5;
    for (std::size_t j = 0; j < d; ++j) {
      x[i][j] = 2.0 * normal(rng) + static_cast<double>(j);
      t += beta[j] * x[i][j];
    }
    y[i] = t + noise * normal(rng);
  }
  return make_dataset(x, y);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("loopsim_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace loopsim::testing
