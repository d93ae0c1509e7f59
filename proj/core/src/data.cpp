#include "loopsim/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "loopsim/errors.hpp"
#include "loopsim/random.hpp"

namespace loopsim {

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != rows() || row_ids.size() != rows()) {
    throw DataError("dataset shape mismatch: " + std::to_string(features.rows()) + " feature rows, " +
                    std::to_string(rows()) + " targets, " + std::to_string(row_ids.size()) + " row ids");
  }
  if (!features.allFinite()) throw DataError("dataset contains non-finite feature values");
  if (!targets.allFinite()) throw DataError("dataset contains non-finite targets");
}

Dataset Dataset::select(std::span<const std::size_t> positions) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(positions.size()), features.cols());
  out.targets.resize(static_cast<Eigen::Index>(positions.size()));
  out.row_ids.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(positions[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(src);
    out.targets[static_cast<Eigen::Index>(i)] = targets[src];
    out.row_ids.push_back(row_ids[positions[i]]);
  }
  return out;
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > rows()) throw ContractViolation("slice out of range");
  Dataset out;
  const auto b = static_cast<Eigen::Index>(begin);
  const auto c = static_cast<Eigen::Index>(count);
  out.features = features.middleRows(b, c);
  out.targets = targets.segment(b, c);
  out.row_ids.assign(row_ids.begin() + static_cast<std::ptrdiff_t>(begin),
                     row_ids.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

bool Dataset::operator==(const Dataset& other) const {
  return features.rows() == other.features.rows() && features.cols() == other.features.cols() &&
         features == other.features && targets.size() == other.targets.size() &&
         targets == other.targets && row_ids == other.row_ids;
}

// ---------------------------------------------------------------------------

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractViolation("window capacity must be positive");
}

void SlidingWindow::fill(DataRow row) {
  if (full()) throw ContractViolation("fill on a full window");
  rows_.push_back(std::move(row));
}

void SlidingWindow::push_replace(DataRow row) {
  if (!full()) throw ContractViolation("push_replace on a window that is not full");
  rows_.pop_front();
  rows_.push_back(std::move(row));
}

Dataset SlidingWindow::to_dataset() const {
  Dataset out;
  const auto n = static_cast<Eigen::Index>(rows_.size());
  const auto d = rows_.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows_.front().features.size());
  out.features.resize(n, d);
  out.targets.resize(n);
  out.row_ids.reserve(rows_.size());
  Eigen::Index i = 0;
  for (const DataRow& r : rows_) {
    out.features.row(i) = Eigen::Map<const Eigen::RowVectorXd>(r.features.data(), d);
    out.targets[i] = r.target;
    out.row_ids.push_back(r.row_id);
    ++i;
  }
  return out;
}

DataRow row_of(const Dataset& ds, std::size_t position) {
  const auto i = static_cast<Eigen::Index>(position);
  DataRow r;
  r.features.assign(ds.features.row(i).data(), ds.features.row(i).data() + ds.features.cols());
  r.target = ds.targets[i];
  r.row_id = ds.row_ids[position];
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file has no header: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);

  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end()) throw DataError("target column '" + target_column + "' not in header");
  const auto target_idx = static_cast<std::size_t>(target_it - header.begin());
  const std::size_t d = header.size() - 1;

  std::vector<double> feats;
  std::vector<double> targets;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw DataError("row " + std::to_string(row) + ", column '" + header[c] +
                        "': cannot parse '" + cell + "' as a finite number");
      }
      if (c == target_idx) {
        if (!(v > 0.0)) {
          throw DataError("row " + std::to_string(row) + ": price " + cell +
                          " is not strictly positive");
        }
        targets.push_back(std::log(v));
      } else {
        feats.push_back(v);
      }
    }
    ++row;
  }

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(targets.size());
  ds.features = Eigen::Map<Matrix>(feats.data(), n, static_cast<Eigen::Index>(d));
  ds.targets = Eigen::Map<Vector>(targets.data(), n);
  ds.row_ids.resize(targets.size());
  std::iota(ds.row_ids.begin(), ds.row_ids.end(), RowId{0});
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& target_column,
               const std::vector<std::string>& feature_names) {
  ds.validate();
  if (!feature_names.empty() && feature_names.size() != ds.cols()) {
    throw ContractViolation("write_csv: feature name count does not match columns");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CSV file: " + path.string());
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    out << (feature_names.empty() ? "x" + std::to_string(c) : feature_names[c]) << ',';
  }
  out << target_column << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      out << format_double(ds.features(i, static_cast<Eigen::Index>(c))) << ',';
    }
    out << format_double(std::exp(ds.targets[i])) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Dataset synthesize(std::size_t n, std::size_t d, double noise_sd, std::uint64_t seed) {
  if (n < 4) throw ContractViolation("synthesize: n must be at least 4");
  if (d < 1) throw ContractViolation("synthesize: d must be at least 1");
  if (!(noise_sd >= 0.0)) throw ContractViolation("synthesize: noise_sd must be non-negative");

  // Fixed signal; coefficients depend only on the column index. Weights decay
  // geometrically so a few leading columns dominate, as in housing data where
  // two or three attributes explain most of the price. Each column enters
  // through a blend of a linear and a saturating response. The total signal
  // weight is normalized to 1.5 whatever d is.
  constexpr double kIntercept = 3.0;
  constexpr double kSignalWeight = 1.5;
  constexpr double kDecay = 0.3;
  constexpr double kSaturating = 0.35;
  std::vector<double> beta(d), scale(d), offset(d);
  double beta_ss = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    beta[j] = ((j % 2 == 0) ? 1.0 : -1.0) * std::pow(kDecay, static_cast<double>(j));
    scale[j] = 0.5 + static_cast<double>(j % 5);
    offset[j] = 10.0 * static_cast<double>(j % 3);
    beta_ss += beta[j] * beta[j];
  }
  for (double& b : beta) b *= std::sqrt(kSignalWeight / beta_ss);

  RandomEngine rng(derive_seed({seed, 0x53594e5448ULL}));
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.targets.resize(static_cast<Eigen::Index>(n));
  ds.row_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    double y = kIntercept;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = normal(rng);
      ds.features(r, static_cast<Eigen::Index>(j)) = offset[j] + scale[j] * z;
      y += beta[j] * ((1.0 - kSaturating) * z + kSaturating * std::tanh(1.5 * z) / 0.8);
    }
    ds.targets[r] = y + noise_sd * normal(rng);
    ds.row_ids[i] = static_cast<RowId>(i);
  }
  return ds;
}

TrainHoldout split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ContractViolation("split: train_fraction must be strictly between 0 and 1");
  }
  const std::size_t n = ds.rows();
  if (n < 4) throw ContractViolation("split: need at least 4 rows, got " + std::to_string(n));
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 0.5 + 1e-9));
  if (n_train < 1 || n_train >= n) {
    throw ContractViolation("split: fraction leaves one part empty");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RandomEngine rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> train_pos(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> hold_pos(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train_pos.begin(), train_pos.end());
  std::sort(hold_pos.begin(), hold_pos.end());
  return {ds.select(train_pos), ds.select(hold_pos)};
}

std::size_t window_capacity(std::size_t n, double take_fraction) {
  // The guard keeps products like 0.3 * 30 = 8.999999999999998 from losing a row.
  return static_cast<std::size_t>(std::floor(take_fraction * static_cast<double>(n) + 1e-9));
}

SlidingWindow window_from(const Dataset& ds, double take_fraction) {
  if (!(take_fraction > 0.0 && take_fraction < 1.0)) {
    throw ContractViolation("window_from: take_fraction must be strictly between 0 and 1");
  }
  const std::size_t cap = window_capacity(ds.rows(), take_fraction);
  if (cap < 4) {
    throw ContractViolation("window_from: capacity " + std::to_string(cap) + " is below 4");
  }
  SlidingWindow w(cap);
  for (std::size_t i = 0; i < cap; ++i) w.fill(row_of(ds, i));
  return w;
}

}  // namespace loopsim
