#include "loopsim/tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "loopsim/errors.hpp"
#include "loopsim/stats.hpp"

namespace loopsim {

RegressionTree RegressionTree::constant(double value, std::size_t samples) {
  RegressionTree t;
  Node leaf;
  leaf.value = value;
  leaf.samples = samples;
  t.nodes_.push_back(leaf);
  return t;
}

std::size_t RegressionTree::leaf_index(const double* row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const Node& n = nodes_[i];
    i = static_cast<std::size_t>(row[n.feature] <= n.threshold ? n.left : n.right);
  }
  return i;
}

double RegressionTree::predict_row(const double* row) const {
  return nodes_[leaf_index(row)].value;
}

Vector RegressionTree::predict(const Matrix& features) const {
  Vector out(features.rows());
  for (Eigen::Index r = 0; r < features.rows(); ++r) out[r] = predict_row(features.row(r).data());
  return out;
}

int RegressionTree::depth() const {
  int d = 0;
  for (const Node& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

double absolute_deviation(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double med = median(values);
  double acc = 0.0;
  for (double v : values) acc += std::abs(v - med);
  return acc;
}

// ---------------------------------------------------------------------------

TreeBuilder::TreeBuilder(const Matrix& features)
    : features_(features),
      n_(static_cast<std::size_t>(features.rows())),
      d_(static_cast<std::size_t>(features.cols())) {
  columns_.resize(d_);
  order_.resize(d_ * n_);
  for (std::size_t f = 0; f < d_; ++f) {
    auto& col = columns_[f];
    col.resize(n_);
    for (std::size_t r = 0; r < n_; ++r) {
      col[r] = features_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f));
    }
    auto ord = std::span(order_).subspan(f * n_, n_);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
  }
  goes_left_.assign(n_, 0);
  spill_.reserve(n_);
  seq_x_.reserve(n_);
  left_cost_.assign(n_ + 1, 0.0);
}

std::span<std::size_t> TreeBuilder::segment(std::size_t feature, std::size_t begin, std::size_t end) {
  return std::span(work_).subspan(feature * n_ + begin, end - begin);
}

void TreeBuilder::RankSet::reset(std::span<const double> sorted_values) {
  values_ = sorted_values;
  bits_.assign(sorted_values.size() / 64 + 1, 0);
  count_ = 0;
  boundary_ = -1;
  lower_sum_ = 0.0;
  total_ = 0.0;
}

std::ptrdiff_t TreeBuilder::RankSet::next_above(std::ptrdiff_t rank) const {
  auto pos = static_cast<std::size_t>(rank + 1);
  std::size_t w = pos >> 6;
  if (w >= bits_.size()) return -1;
  std::uint64_t word = bits_[w] & (~std::uint64_t{0} << (pos & 63));
  while (word == 0) {
    if (++w == bits_.size()) return -1;
    word = bits_[w];
  }
  return static_cast<std::ptrdiff_t>((w << 6) + static_cast<std::size_t>(std::countr_zero(word)));
}

std::ptrdiff_t TreeBuilder::RankSet::prev_below(std::ptrdiff_t rank) const {
  if (rank <= 0) return -1;
  const auto pos = static_cast<std::size_t>(rank - 1);
  std::size_t w = pos >> 6;
  std::uint64_t word = bits_[w] & (~std::uint64_t{0} >> (63 - (pos & 63)));
  while (word == 0) {
    if (w == 0) return -1;
    word = bits_[--w];
  }
  return static_cast<std::ptrdiff_t>((w << 6) + 63 - static_cast<std::size_t>(std::countl_zero(word)));
}

void TreeBuilder::RankSet::insert(std::size_t rank) {
  const auto r = static_cast<std::ptrdiff_t>(rank);
  bits_[rank >> 6] |= std::uint64_t{1} << (rank & 63);
  const double v = values_[rank];
  total_ += v;
  const bool lower_grows = count_ % 2 == 1;  // floor(count/2) increases by one
  ++count_;
  if (boundary_ >= 0 && r < boundary_) {
    lower_sum_ += v;
    if (!lower_grows) {
      lower_sum_ -= values_[static_cast<std::size_t>(boundary_)];
      boundary_ = prev_below(boundary_);
    }
  } else if (lower_grows) {
    boundary_ = next_above(boundary_);
    lower_sum_ += values_[static_cast<std::size_t>(boundary_)];
  }
}

double TreeBuilder::RankSet::deviation() const {
  // sum |y - median| = (sum of upper half) - (sum of lower half).
  double cost = total_ - 2.0 * lower_sum_;
  if (count_ % 2 == 1) cost -= values_[static_cast<std::size_t>(next_above(boundary_))];
  return cost > 0.0 ? cost : 0.0;
}

namespace {

double midpoint(double a, double b) {
  const double mid = a + (b - a) / 2.0;
  return mid < b ? mid : a;
}

}  // namespace

void TreeBuilder::scan_feature(std::size_t f, std::span<const std::size_t> seq, std::size_t min_leaf, Split& best) {
  const std::size_t m = seq.size();
  constexpr double kInvalid = -1.0;
  const auto& col = columns_[f];
  seq_x_.clear();
  for (std::size_t r : seq) seq_x_.push_back(col[r]);
  if (m < 2 || seq_x_.front() == seq_x_.back()) return;

  ranks_.reset(sorted_targets_);
  for (std::size_t k = 1; k < m; ++k) {
    ranks_.insert(rank_[seq[k - 1]]);
    const bool valid = k >= min_leaf && m - k >= min_leaf && seq_x_[k - 1] < seq_x_[k];
    left_cost_[k] = valid ? ranks_.deviation() : kInvalid;
  }

  ranks_.reset(sorted_targets_);
  for (std::size_t k = m - 1; k >= 1; --k) {
    ranks_.insert(rank_[seq[k]]);
    if (left_cost_[k] != kInvalid) left_cost_[k] += ranks_.deviation();
  }

  for (std::size_t k = 1; k < m; ++k) {
    if (left_cost_[k] != kInvalid && left_cost_[k] < best.cost) {
      best.feature = static_cast<int>(f);
      best.threshold = midpoint(seq_x_[k - 1], seq_x_[k]);
      best.cost = left_cost_[k];
    }
  }
}

TreeBuilder::Split TreeBuilder::best_split(std::size_t begin, std::size_t end, std::size_t min_leaf) {
  Split best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < d_; ++f) scan_feature(f, segment(f, begin, end), min_leaf, best);
  return best;
}

double TreeBuilder::stump_cost(std::span<const char> mask, char member, std::size_t count) {
  ranks_.reset(sorted_targets_);
  for (std::size_t r = 0; r < n_; ++r) {
    if (mask[r] == member) ranks_.insert(rank_[r]);
  }
  const double node_cost = ranks_.deviation();
  if (count < 2 * params_.min_samples_leaf || node_cost <= 0.0) return node_cost;

  Split best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < d_; ++f) {
    subset_.clear();
    for (std::size_t r : std::span(order_).subspan(f * n_, n_)) {
      if (mask[r] == member) subset_.push_back(r);
    }
    scan_feature(f, subset_, params_.min_samples_leaf, best);
  }
  return node_cost - best.cost > 1e-12 * std::max(1.0, node_cost) ? best.cost : node_cost;
}

std::int32_t TreeBuilder::grow(std::size_t begin, std::size_t end, int depth, RegressionTree& tree,
                               const Split* forced) {
  const auto idx = static_cast<std::int32_t>(tree.nodes_.size());
  const std::size_t m = end - begin;
  tree.nodes_.emplace_back();
  leaf_rows_.emplace_back();
  tree.nodes_.back().samples = m;
  tree.nodes_.back().depth = depth;

  const auto rows = segment(0, begin, end);
  std::vector<double> vals;
  vals.reserve(m);
  for (std::size_t r : rows) vals.push_back(targets_[r]);
  const double node_cost = absolute_deviation(vals);

  if (depth < params_.max_depth && m >= 2 * params_.min_samples_leaf && node_cost > 0.0) {
    const Split s = forced != nullptr ? *forced : best_split(begin, end, params_.min_samples_leaf);
    const double tol = 1e-12 * std::max(1.0, node_cost);
    if (s.feature >= 0 && (forced != nullptr || node_cost - s.cost > tol)) {
      const auto& col = columns_[static_cast<std::size_t>(s.feature)];
      std::size_t n_left = 0;
      for (std::size_t r : rows) {
        goes_left_[r] = col[r] <= s.threshold ? 1 : 0;
        n_left += goes_left_[r];
      }
      // Stable partition of every feature's segment keeps each side sorted.
      for (std::size_t f = 0; f < d_; ++f) {
        auto seg = segment(f, begin, end);
        spill_.clear();
        std::size_t out = 0;
        for (std::size_t r : seg) {
          if (goes_left_[r]) {
            seg[out++] = r;
          } else {
            spill_.push_back(r);
          }
        }
        std::copy(spill_.begin(), spill_.end(), seg.begin() + static_cast<std::ptrdiff_t>(out));
      }
      tree.nodes_[static_cast<std::size_t>(idx)].feature = s.feature;
      tree.nodes_[static_cast<std::size_t>(idx)].threshold = s.threshold;
      const std::int32_t l = grow(begin, begin + n_left, depth + 1, tree, nullptr);
      const std::int32_t r = grow(begin + n_left, end, depth + 1, tree, nullptr);
      tree.nodes_[static_cast<std::size_t>(idx)].left = l;
      tree.nodes_[static_cast<std::size_t>(idx)].right = r;
      return idx;
    }
  }

  tree.nodes_[static_cast<std::size_t>(idx)].value = median(vals);
  leaf_rows_[static_cast<std::size_t>(idx)].assign(rows.begin(), rows.end());
  return idx;
}

void TreeBuilder::prepare(std::span<const double> targets, const TreeParams& params) {
  if (targets.size() != n_) throw ContractViolation("tree fit: target length does not match rows");
  if (params.max_depth < 1) throw ContractViolation("tree fit: max_depth must be positive");
  if (params.min_samples_leaf < 1) throw ContractViolation("tree fit: min_samples_leaf must be positive");
  if (n_ < 2 * params.min_samples_leaf) {
    throw ContractViolation("tree fit: need at least 2 * min_samples_leaf rows");
  }

  targets_ = targets;
  params_ = params;
  std::vector<std::size_t> by_value(n_);
  std::iota(by_value.begin(), by_value.end(), 0);
  std::stable_sort(by_value.begin(), by_value.end(),
                   [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
  rank_.resize(n_);
  sorted_targets_.resize(n_);
  for (std::size_t pos = 0; pos < n_; ++pos) {
    rank_[by_value[pos]] = pos;
    sorted_targets_[pos] = targets[by_value[pos]];
  }
  leaf_rows_.clear();
  work_ = order_;
}

RegressionTree TreeBuilder::fit(std::span<const double> targets, const TreeParams& params) {
  prepare(targets, params);
  RegressionTree tree;
  tree.params_ = params;
  grow(0, n_, 0, tree, nullptr);
  targets_ = {};
  return tree;
}

RegressionTree TreeBuilder::fit_exact(std::span<const double> targets, const TreeParams& params) {
  if (params.max_depth > 2) throw ContractViolation("tree fit: exact search supports max_depth <= 2");
  if (params.max_depth < 2) return fit(targets, params);
  prepare(targets, params);

  // Every root split is scored by the best depth-1 subtree on each side.
  std::vector<char> left(n_, 0);
  const std::size_t min_leaf = params_.min_samples_leaf;
  Split best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < d_; ++f) {
    const auto seq = std::span(order_).subspan(f * n_, n_);
    const auto& col = columns_[f];
    std::fill(left.begin(), left.end(), 0);
    for (std::size_t k = 1; k < n_; ++k) {
      left[seq[k - 1]] = 1;
      if (k < min_leaf || n_ - k < min_leaf || !(col[seq[k - 1]] < col[seq[k]])) continue;
      const double cost = stump_cost(left, 1, k) + stump_cost(left, 0, n_ - k);
      if (cost < best.cost) {
        best.feature = static_cast<int>(f);
        best.threshold = midpoint(col[seq[k - 1]], col[seq[k]]);
        best.cost = cost;
      }
    }
  }

  RegressionTree tree;
  tree.params_ = params;
  std::fill(left.begin(), left.end(), 1);
  const double root_cost = stump_cost(left, 1, n_);
  const bool split = best.feature >= 0 && root_cost - best.cost > 1e-12 * std::max(1.0, root_cost);
  grow(0, n_, 0, tree, split ? &best : nullptr);
  targets_ = {};
  return tree;
}

RegressionTree fit_tree_mae(const Dataset& train, const TreeParams& params) {
  TreeBuilder builder(train.features);
  const std::span<const double> y(train.targets.data(), train.rows());
  return params.max_depth <= 2 ? builder.fit_exact(y, params) : builder.fit(y, params);
}

}  // namespace loopsim
