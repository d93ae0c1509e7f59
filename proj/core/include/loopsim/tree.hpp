#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "loopsim/data.hpp"

namespace loopsim {

struct TreeParams {
  int max_depth = 3;
  std::size_t min_samples_leaf = 1;
};

/// Binary regression tree. Rows with x[feature] <= threshold go left.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
    std::size_t samples = 0;
    int depth = 0;

    bool is_leaf() const noexcept { return feature < 0; }
  };

  RegressionTree() = default;

  /// A single leaf predicting `value` for every input.
  static RegressionTree constant(double value, std::size_t samples = 0);

  double predict_row(const double* row) const;
  Vector predict(const Matrix& features) const;

  /// Index of the leaf that `row` lands in.
  std::size_t leaf_index(const double* row) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::vector<Node>& mutable_nodes() noexcept { return nodes_; }
  const TreeParams& params() const noexcept { return params_; }
  int depth() const;
  std::size_t leaf_count() const;

 private:
  friend class TreeBuilder;
  std::vector<Node> nodes_;
  TreeParams params_;
};

/// Tree minimizing the summed absolute deviation of each leaf about its
/// median. Candidate thresholds are midpoints of consecutive distinct feature
/// values. Leaves hold the median of their rows. With max_depth <= 2 the result
/// is the optimum over all such trees; deeper trees are grown greedily.
RegressionTree fit_tree_mae(const Dataset& train, const TreeParams& params);

/// Reusable fitter for many trees over one feature matrix. Columns are sorted
/// once; each split search then costs O(m log n) per feature for a node of m rows.
/// Holds scratch buffers, so one builder must not be shared between threads.
class TreeBuilder {
 public:
  explicit TreeBuilder(const Matrix& features);

  /// Greedy top-down growth: each node takes its best single split.
  RegressionTree fit(std::span<const double> targets, const TreeParams& params);

  /// Exact optimum over trees of depth <= 2. Costs O((d n)^2) rank updates.
  RegressionTree fit_exact(std::span<const double> targets, const TreeParams& params);

  /// Training rows of each node of the most recent fit (empty for internal nodes).
  const std::vector<std::vector<std::size_t>>& leaf_rows() const noexcept { return leaf_rows_; }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double cost = 0.0;
  };

  // A node owns positions [begin, end) of every feature's row ordering.
  void prepare(std::span<const double> targets, const TreeParams& params);
  // `forced` overrides the split search at this node.
  std::int32_t grow(std::size_t begin, std::size_t end, int depth, RegressionTree& tree, const Split* forced);
  Split best_split(std::size_t begin, std::size_t end, std::size_t min_leaf);
  void scan_feature(std::size_t f, std::span<const std::size_t> seq, std::size_t min_leaf, Split& best);
  // Cost of the best depth <= 1 tree on the rows with mask[r] == member.
  double stump_cost(std::span<const char> mask, char member, std::size_t count);
  std::span<std::size_t> segment(std::size_t feature, std::size_t begin, std::size_t end);

  // Multiset of target ranks supporting O(1) amortized insertion while
  // tracking the sum of the lower half, hence the absolute deviation about
  // the median. Ranks are distinct, so a bitmask is enough.
  class RankSet {
   public:
    void reset(std::span<const double> sorted_values);
    void insert(std::size_t rank);
    double deviation() const;

   private:
    std::ptrdiff_t next_above(std::ptrdiff_t rank) const;
    std::ptrdiff_t prev_below(std::ptrdiff_t rank) const;

    std::span<const double> values_;
    std::vector<std::uint64_t> bits_;
    std::size_t count_ = 0;
    std::ptrdiff_t boundary_ = -1;  // rank of the floor(count/2)-th smallest, -1 when none
    double lower_sum_ = 0.0;
    double total_ = 0.0;
  };

  const Matrix& features_;
  std::size_t n_;
  std::size_t d_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::size_t> order_;  // d_ x n_: per feature, rows by ascending value
  std::vector<std::size_t> work_;   // order_ partitioned down the tree during a fit

  // Per-fit state.
  std::span<const double> targets_;
  std::vector<std::size_t> rank_;
  std::vector<double> sorted_targets_;
  TreeParams params_;
  std::vector<std::vector<std::size_t>> leaf_rows_;

  // Scratch.
  std::vector<char> goes_left_;
  std::vector<std::size_t> spill_;
  std::vector<double> seq_x_;
  std::vector<std::size_t> subset_;
  RankSet ranks_;
  std::vector<double> left_cost_;
};

/// Sum of |y - median(y)|.
double absolute_deviation(std::span<const double> values);

}  // namespace loopsim
