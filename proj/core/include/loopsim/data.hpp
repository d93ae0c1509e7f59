#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace loopsim {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowId = std::int64_t;

/// Feature matrix plus log-price targets. Row order is meaningful: the
/// simulation consumes rows front to back.
struct Dataset {
  Matrix features;
  Vector targets;
  std::vector<RowId> row_ids;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(targets.size()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(features.cols()); }

  /// Throws DataError when shapes disagree or any value is not finite.
  void validate() const;

  /// Rows at the given positions, in the given order.
  Dataset select(std::span<const std::size_t> positions) const;

  /// Contiguous rows [begin, begin + count).
  Dataset slice(std::size_t begin, std::size_t count) const;

  bool operator==(const Dataset& other) const;
};

struct SplitSpec {
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
};

struct TrainHoldout {
  Dataset train;
  Dataset holdout;
};

/// One row of a dataset, detached from its matrix.
struct DataRow {
  std::vector<double> features;
  double target = 0.0;
  RowId row_id = 0;
};

/// Fixed-capacity FIFO of rows. Once full, every push drops the oldest row.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool full() const noexcept { return rows_.size() == capacity_; }

  /// Appends while filling up. Only valid when not yet full.
  void fill(DataRow row);

  /// Drops the front row and appends `row` at the back. The window must be full.
  void push_replace(DataRow row);

  const DataRow& front() const { return rows_.front(); }
  const DataRow& back() const { return rows_.back(); }
  const std::deque<DataRow>& rows() const noexcept { return rows_; }

  /// Materializes the window contents in order.
  Dataset to_dataset() const;

 private:
  std::size_t capacity_;
  std::deque<DataRow> rows_;
};

/// Reads a headered CSV file. The target column is log-transformed; every
/// other column becomes a feature in header order. Row ids are 0..n-1.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column = "MEDV");

/// Writes `ds` in the format load_csv reads, exponentiating targets back to prices.
/// Feature columns are named by `feature_names` (or x0, x1, ... when empty).
void write_csv(const Dataset& ds, const std::filesystem::path& path,
               const std::string& target_column = "MEDV",
               const std::vector<std::string>& feature_names = {});

/// Seeded synthetic housing-like data in log-price units: a fixed linear
/// signal whose weights decay across columns, a mild saturating per-feature
/// term, and Normal(0, noise_sd^2) noise.
Dataset synthesize(std::size_t n, std::size_t d, double noise_sd, std::uint64_t seed);

/// Seeded row partition. Train receives round-half-up(train_fraction * n) rows.
/// Both parts keep the source order.
TrainHoldout split(const Dataset& ds, const SplitSpec& spec);

/// Window of capacity floor(take_fraction * n) holding the first rows of `ds`.
SlidingWindow window_from(const Dataset& ds, double take_fraction);

/// Capacity used by window_from: floor(take_fraction * n).
std::size_t window_capacity(std::size_t n, double take_fraction);

DataRow row_of(const Dataset& ds, std::size_t position);

}  // namespace loopsim
