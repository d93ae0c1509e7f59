#include "loopsim/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "loopsim/errors.hpp"
#include "loopsim/metrics.hpp"
#include "loopsim/random.hpp"
#include "loopsim/stats.hpp"

namespace loopsim {

PerformanceFn reference_performance(double alpha, double train_fraction, std::uint64_t split_seed) {
  return [=](const Dataset& ds) {
    const TrainHoldout parts = split(ds, {train_fraction, split_seed});
    const RidgeModel m = fit_ridge(parts.train, alpha);
    const Vector pred = m.predict(parts.holdout.features);
    return r2({parts.holdout.targets.data(), parts.holdout.rows()}, {pred.data(), parts.holdout.rows()});
  };
}

WindowSampler bootstrap_sampler(Dataset source, std::size_t size) {
  if (source.rows() == 0) throw ContractViolation("bootstrap_sampler: empty source");
  return [source = std::move(source), size](std::uint64_t seed) {
    RandomEngine rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, source.rows() - 1);
    std::vector<std::size_t> idx(size);
    for (auto& i : idx) i = pick(rng);
    return source.select(idx);
  };
}

std::string_view contraction_status_name(ContractionStatus s) noexcept {
  switch (s) {
    case ContractionStatus::kContraction: return "contraction";
    case ContractionStatus::kNoContractionEvidence: return "no_contraction_evidence";
    case ContractionStatus::kInconclusive: return "inconclusive";
  }
  return "?";
}

ContractionReport estimate_contraction(const TransitionFn& transition, const PerformanceFn& performance,
                                       const WindowSampler& sampler, const ContractionOptions& options) {
  if (options.n_pairs < 20) throw ContractViolation("estimate_contraction: need at least 20 pairs");
  if (!(options.epsilon_floor > 0.0)) throw ContractViolation("estimate_contraction: epsilon_floor must be positive");
  if (!(options.quantile > 0.0 && options.quantile <= 1.0)) {
    throw ContractViolation("estimate_contraction: quantile must be in (0, 1]");
  }
  if (!(options.margin >= 0.0 && options.margin < 1.0)) {
    throw ContractViolation("estimate_contraction: margin must be in [0, 1)");
  }

  ContractionReport report;
  report.pairs_sampled = options.n_pairs;
  report.epsilon_floor = options.epsilon_floor;
  report.margin = options.margin;
  report.quantile = options.quantile;

  for (std::size_t i = 0; i < options.n_pairs; ++i) {
    const std::uint64_t pair_seed = derive_seed({options.seed, i});
    const Dataset x = sampler(derive_seed({pair_seed, 1}));
    const Dataset y = sampler(derive_seed({pair_seed, 2}));
    const double d = std::abs(performance(x) - performance(y));
    if (!(d >= options.epsilon_floor)) {
      ++report.pairs_discarded;
      continue;
    }
    // Both images share one seed: same incoming rows, same user draws.
    const std::uint64_t step_seed = derive_seed({pair_seed, 3});
    const double d_next = std::abs(performance(transition(x, step_seed)) - performance(transition(y, step_seed)));
    report.ratios.push_back(d_next / d);
  }

  const std::size_t retained = report.ratios.size();
  if (retained == 0) {
    report.a_hat = std::numeric_limits<double>::quiet_NaN();
    report.status = ContractionStatus::kInconclusive;
    return report;
  }
  report.a_hat = quantile(report.ratios, options.quantile);
  const bool enough = 2 * retained >= options.n_pairs;
  report.contraction_detected = enough && report.a_hat < 1.0 - options.margin;
  if (report.contraction_detected) {
    report.status = ContractionStatus::kContraction;
  } else {
    report.status = enough ? ContractionStatus::kNoContractionEvidence : ContractionStatus::kInconclusive;
  }
  return report;
}

// ---------------------------------------------------------------------------

TrendTest trend_test(const std::vector<double>& series, double rho_threshold, std::size_t min_rounds) {
  std::vector<double> index(series.size());
  std::iota(index.begin(), index.end(), 1.0);
  TrendTest t;
  t.rho = spearman(index, series);
  t.alarm = series.size() >= min_rounds && t.rho > rho_threshold;
  return t;
}

BaselineMonitorState init_baseline(const Dataset& round1_train, const BaselineOptions& options) {
  BaselineMonitorState state;
  state.options = options;
  state.baseline = fit_ridge(round1_train, options.alpha);
  return state;
}

BaselineMonitorState baseline_update(BaselineMonitorState state, const Dataset& round_window,
                                     std::uint64_t split_seed) {
  const TrainHoldout parts = split(round_window, {state.options.train_fraction, split_seed});
  const Vector pred = state.baseline.predict(parts.holdout.features);
  const std::span<const double> yt(parts.holdout.targets.data(), parts.holdout.rows());
  const std::span<const double> yp(pred.data(), parts.holdout.rows());
  state.r2_series.push_back(r2(yt, yp));
  state.mae_series.push_back(mae(yt, yp));
  const TrendTest t = trend_test(state.r2_series, state.options.rho_threshold, state.options.min_rounds);
  state.rho = t.rho;
  state.alarm = state.alarm || t.alarm;
  return state;
}

// ---------------------------------------------------------------------------

PageHinkleyState make_page_hinkley(double delta, double lambda, DriftDirection direction) {
  if (!(delta >= 0.0)) throw ContractViolation("page_hinkley: delta must be non-negative");
  if (!(lambda > 0.0)) throw ContractViolation("page_hinkley: lambda must be positive");
  PageHinkleyState s;
  s.delta = delta;
  s.lambda = lambda;
  s.direction = direction;
  return s;
}

PageHinkleyState page_hinkley_update(PageHinkleyState state, double value) {
  const double x = state.direction == DriftDirection::kIncrease ? value : -value;
  ++state.count;
  state.mean += (x - state.mean) / static_cast<double>(state.count);
  state.cumulative += x - state.mean - state.delta;
  state.minimum = std::min(state.minimum, state.cumulative);
  if (state.statistic() > state.lambda) state.alarm = true;
  return state;
}

void RuntimeMonitor::observe(const RoundContext& ctx) {
  if (!baseline) baseline = init_baseline(ctx.parts.train, baseline_options);
  baseline = baseline_update(std::move(*baseline), ctx.window, ctx.split_seed);
  drift = page_hinkley_update(drift, baseline->mae_series.back());
}

// ---------------------------------------------------------------------------

ChecklistReport build_checklist(const ChecklistInputs& in) {
  ChecklistReport r;
  r.q1_data_from_influenced_users = in.data_from_influenced_users;
  r.q1_rationale = in.rationale;
  r.q2_p_gt_half_and_s_lt_one = in.p > 0.5 && in.s < 1.0;
  r.q3_contraction = in.contraction;
  r.baseline_alarm = in.baseline_alarm;
  r.drift_alarm = in.drift_alarm;
  r.loop_indicated = (r.q1_data_from_influenced_users && r.q2_p_gt_half_and_s_lt_one) ||
                     (in.contraction && in.contraction->contraction_detected) ||
                     in.baseline_alarm.value_or(false) || in.drift_alarm.value_or(false);
  return r;
}

}  // namespace loopsim
