#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loopsim/data.hpp"
#include "loopsim/ridge.hpp"
#include "loopsim/simulation.hpp"

namespace loopsim {

// ---------------------------------------------------------------------------
// Contraction estimate: does one transition of the loop pull the performance
// of any two datasets closer together, d(R(Tx), R(Ty)) <= A d(R(x), R(y)) with A < 1?

using PerformanceFn = std::function<double(const Dataset&)>;
using TransitionFn = std::function<Dataset(const Dataset&, std::uint64_t seed)>;
using WindowSampler = std::function<Dataset(std::uint64_t seed)>;

/// Held-out R^2 of a ridge model with fixed alpha under a fixed seeded split.
PerformanceFn reference_performance(double alpha = 1.0, double train_fraction = 0.75,
                                    std::uint64_t split_seed = 0x5eed);

/// Datasets of `size` rows drawn with replacement from `source`.
WindowSampler bootstrap_sampler(Dataset source, std::size_t size);

struct ContractionOptions {
  std::size_t n_pairs = 50;
  double epsilon_floor = 0.005;  // about the resolution of hold-out R^2 on window-sized data
  double margin = 0.05;
  double quantile = 0.95;
  std::uint64_t seed = 0;
};

enum class ContractionStatus {
  kContraction,          // A_hat < 1 - margin on enough retained pairs
  kNoContractionEvidence,
  kInconclusive,         // too few pairs survived the epsilon floor
};

std::string_view contraction_status_name(ContractionStatus s) noexcept;

struct ContractionReport {
  std::size_t pairs_sampled = 0;
  std::size_t pairs_discarded = 0;
  std::vector<double> ratios;  // retained pairs, in pair order
  double a_hat = 0.0;
  bool contraction_detected = false;
  double epsilon_floor = 0.0;
  double margin = 0.0;
  double quantile = 0.0;
  ContractionStatus status = ContractionStatus::kInconclusive;
};

ContractionReport estimate_contraction(const TransitionFn& transition,
                                       const PerformanceFn& performance,
                                       const WindowSampler& sampler,
                                       const ContractionOptions& options);

// ---------------------------------------------------------------------------
// Frozen baseline: a low-variance model fit once. If its score trends upward
// while it never changes, the environment is moving toward the deployed model.

struct BaselineOptions {
  double alpha = 1.0;
  double train_fraction = 0.75;
  double rho_threshold = 0.6;
  std::size_t min_rounds = 8;
};

struct BaselineMonitorState {
  RidgeModel baseline;
  BaselineOptions options;
  std::vector<double> r2_series;
  std::vector<double> mae_series;
  double rho = 0.0;
  bool alarm = false;
};

BaselineMonitorState init_baseline(const Dataset& round1_train, const BaselineOptions& options = {});

/// Scores the frozen baseline on the held-out part of `round_window` split
/// with `split_seed`, then recomputes the Spearman trend of R^2 against round.
BaselineMonitorState baseline_update(BaselineMonitorState state, const Dataset& round_window,
                                     std::uint64_t split_seed);

/// Trend rule on its own: rho of (round index, series) and the alarm decision.
struct TrendTest {
  double rho = 0.0;
  bool alarm = false;
};
TrendTest trend_test(const std::vector<double>& series, double rho_threshold, std::size_t min_rounds);

// ---------------------------------------------------------------------------
// Page-Hinkley change detector.

enum class DriftDirection { kIncrease, kDecrease };

struct PageHinkleyState {
  double delta = 0.05;
  double lambda = 50.0;
  DriftDirection direction = DriftDirection::kIncrease;
  std::size_t count = 0;
  double mean = 0.0;
  double cumulative = 0.0;  // m_t
  double minimum = 0.0;     // M_t
  bool alarm = false;       // latched

  double statistic() const noexcept { return cumulative - minimum; }
};

PageHinkleyState make_page_hinkley(double delta = 0.05, double lambda = 50.0,
                                   DriftDirection direction = DriftDirection::kIncrease);

PageHinkleyState page_hinkley_update(PageHinkleyState state, double value);

// ---------------------------------------------------------------------------
// Runtime monitoring wired into a simulation run.

struct RuntimeMonitor {
  BaselineOptions baseline_options;
  PageHinkleyState drift = make_page_hinkley(0.05, 50.0, DriftDirection::kDecrease);
  std::optional<BaselineMonitorState> baseline;

  /// Round 1 freezes the baseline on that round's training split; every
  /// round then scores it and feeds its held-out MAE to Page-Hinkley.
  void observe(const RoundContext& ctx);

  bool baseline_alarm() const noexcept { return baseline && baseline->alarm; }
  bool drift_alarm() const noexcept { return drift.alarm; }
};

// ---------------------------------------------------------------------------
// Checklist.

struct ChecklistInputs {
  bool data_from_influenced_users = false;
  std::string rationale;
  double p = 0.0;
  double s = 0.0;
  std::optional<ContractionReport> contraction;
  std::optional<bool> baseline_alarm;
  std::optional<bool> drift_alarm;
};

struct ChecklistReport {
  bool q1_data_from_influenced_users = false;
  std::string q1_rationale;
  bool q2_p_gt_half_and_s_lt_one = false;
  std::optional<ContractionReport> q3_contraction;
  std::optional<bool> baseline_alarm;
  std::optional<bool> drift_alarm;
  bool loop_indicated = false;
};

ChecklistReport build_checklist(const ChecklistInputs& inputs);

}  // namespace loopsim
