#include "loopsim/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <random>
#include <thread>

#include "loopsim/errors.hpp"

namespace loopsim {

void UserDecisionModel::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("usage probability p must be in [0, 1]");
  if (!(s >= 0.0)) throw ContractViolation("adherence s must be non-negative");
}

Decision sample_user_decision(double prediction, double true_log_y, double sigma_f2,
                              const UserDecisionModel& user, RandomEngine& rng) {
  if (!(sigma_f2 >= 0.0)) throw ContractViolation("sigma_f2 must be non-negative");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double u = uniform(rng);
  const double e = normal(rng);
  if (u < user.p) return {prediction + std::sqrt(user.s * sigma_f2) * e, true};
  return {true_log_y, false};
}

void SimulationConfig::validate(std::size_t n) const {
  if (!(window_fraction > 0.0 && window_fraction < 1.0)) {
    throw ContractViolation("window_fraction must be strictly between 0 and 1");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ContractViolation("train_fraction must be strictly between 0 and 1");
  }
  if (steps_per_round < 1) throw ContractViolation("steps_per_round must be at least 1");
  user.validate();
  const std::size_t cap = window_capacity(n, window_fraction);
  if (cap < 4) throw ContractViolation("window of " + std::to_string(cap) + " rows is below the minimum of 4");
  if (cap >= n) throw ContractViolation("dataset leaves no rows to consume after the initial window");
  if (effective_grid().size() == 0) throw ContractViolation("empty hyperparameter grid");
}

std::uint64_t round_split_seed(std::uint64_t master_seed, std::size_t round) noexcept {
  return derive_seed({master_seed, 0x53504c4954ULL, round});
}

std::uint64_t round_cv_seed(std::uint64_t master_seed, std::size_t round) noexcept {
  return derive_seed({master_seed, 0x4356ULL, round});
}

std::uint64_t decision_stream_seed(std::uint64_t master_seed, std::uint64_t user_seed) noexcept {
  return derive_seed({master_seed, user_seed, 0x55534552ULL});
}

RoundFit fit_round(const Dataset& window, const SimulationConfig& config, std::size_t round) {
  const std::uint64_t split_seed = round_split_seed(config.master_seed, round);
  RoundFit out{split(window, {config.train_fraction, split_seed}), {}};
  const CvResult cv = grid_search_cv(out.parts.train, config.effective_grid(), config.family,
                                     round_cv_seed(config.master_seed, round));
  out.trained = train_and_evaluate(out.parts.train, out.parts.holdout, config.family, cv.best);
  return out;
}

namespace {

Matrix single_row(const Dataset& ds, std::size_t position) {
  return ds.features.row(static_cast<Eigen::Index>(position));
}

}  // namespace

SimulationResult run_simulation(const Dataset& ds, const SimulationConfig& config,
                                const RoundObserver& observer) {
  ds.validate();
  config.validate(ds.rows());

  SimulationResult result;
  result.config = config;
  SlidingWindow window = window_from(ds, config.window_fraction);
  const std::size_t capacity = window.capacity();
  const std::size_t total_steps = ds.rows() - capacity;
  RandomEngine rng(decision_stream_seed(config.master_seed, config.user.seed));

  std::size_t round = 0;
  std::size_t since_retrain = 0;
  RoundFit current;
  const auto retrain = [&](std::size_t steps_consumed, bool partial) {
    ++round;
    const Dataset contents = window.to_dataset();
    current = fit_round(contents, config, round);
    result.rounds.push_back({round, current.trained.holdout_r2, current.trained.holdout_mae,
                             current.trained.sigma_f2, current.trained.hyperparams, steps_consumed,
                             partial});
    if (observer) {
      observer(RoundContext{round, round_split_seed(config.master_seed, round), contents,
                            current.parts, current.trained});
    }
  };

  retrain(0, false);
  result.steps.reserve(total_steps);
  for (std::size_t t = 0; t < total_steps; ++t) {
    const std::size_t k = capacity + t;
    if (round != result.rounds.size()) {
      throw SimulationError("step " + std::to_string(t) + " would use a stale model", t);
    }
    const double prediction = predict(current.trained.model, single_row(ds, k))[0];
    const Decision decision = sample_user_decision(prediction, ds.targets[static_cast<Eigen::Index>(k)],
                                                   current.trained.sigma_f2, config.user, rng);
    if (!std::isfinite(decision.z) || !std::isfinite(prediction)) {
      throw SimulationError("non-finite value entering the window at step " + std::to_string(t), t);
    }
    result.steps.push_back({t, ds.row_ids[k], round, prediction, decision.z, decision.adhered});

    DataRow row = row_of(ds, k);
    row.target = decision.z;
    window.push_replace(std::move(row));

    if (++since_retrain == config.steps_per_round) {
      retrain(t + 1, false);
      since_retrain = 0;
    }
  }
  if (since_retrain > 0) retrain(total_steps, true);

  result.final_window = window.to_dataset();
  return result;
}

// ---------------------------------------------------------------------------

std::uint64_t sweep_run_seed(std::uint64_t master_seed, const SweepKey& key) noexcept {
  return derive_seed({master_seed, double_bits(key.p), double_bits(key.s), key.m,
                      static_cast<std::uint64_t>(key.family)});
}

std::vector<SweepKey> sweep_keys(const SweepRanges& ranges) {
  if (ranges.p.empty() || ranges.s.empty() || ranges.m.empty() || ranges.families.empty()) {
    throw ContractViolation("sweep: every parameter range must be non-empty");
  }
  std::vector<SweepKey> keys;
  for (ModelFamily f : ranges.families) {
    for (double p : ranges.p) {
      for (double s : ranges.s) {
        for (std::size_t m : ranges.m) keys.push_back({f, p, s, m});
      }
    }
  }
  return keys;
}

std::vector<SweepRun> sweep(const Dataset& ds, const SimulationConfig& base, const SweepRanges& ranges,
                            std::size_t threads,
                            const std::function<RoundObserver(const SweepKey&)>& observers) {
  const std::vector<SweepKey> keys = sweep_keys(ranges);
  std::vector<SweepRun> runs(keys.size());
  std::vector<std::exception_ptr> errors(keys.size());

  const auto run_one = [&](std::size_t i) {
    const SweepKey& key = keys[i];
    SimulationConfig cfg = base;
    cfg.family = key.family;
    cfg.user.p = key.p;
    cfg.user.s = key.s;
    cfg.steps_per_round = key.m;
    cfg.master_seed = sweep_run_seed(base.master_seed, key);
    if (key.family != base.family) cfg.grid.reset();
    try {
      runs[i] = SweepRun{key, cfg.master_seed,
                         run_simulation(ds, cfg, observers ? observers(key) : RoundObserver{})};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, keys.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < keys.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < keys.size(); i = next++) run_one(i);
      });
    }
  }

  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!errors[i]) continue;
    const SweepKey& k = keys[i];
    const std::string label = std::string(family_name(k.family)) + " p=" + std::to_string(k.p) +
                              " s=" + std::to_string(k.s) + " M=" + std::to_string(k.m);
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw Error("sweep run [" + label + "] failed: " + e.what());
    }
  }
  return runs;
}

// ---------------------------------------------------------------------------

RoundTransition::RoundTransition(Dataset source, SimulationConfig config, std::size_t steps)
    : source_(std::move(source)), config_(std::move(config)), steps_(steps) {
  source_.validate();
  config_.user.validate();
  if (source_.rows() == 0) throw ContractViolation("RoundTransition: empty source");
  if (config_.steps_per_round == 0) throw ContractViolation("RoundTransition: steps_per_round must be positive");
}

Dataset RoundTransition::operator()(const Dataset& window, std::uint64_t seed) const {
  SimulationConfig cfg = config_;
  cfg.master_seed = seed;

  SlidingWindow w(window.rows());
  for (std::size_t i = 0; i < window.rows(); ++i) w.fill(row_of(window, i));

  RandomEngine pick(derive_seed({seed, 0x524f5753ULL}));
  std::uniform_int_distribution<std::size_t> any_row(0, source_.rows() - 1);
  RandomEngine rng(decision_stream_seed(seed, cfg.user.seed));
  std::optional<RoundFit> fit;
  std::size_t round = 0;
  for (std::size_t t = 0; t < steps_; ++t) {
    if (t % cfg.steps_per_round == 0) fit = fit_round(w.to_dataset(), cfg, ++round);
    const std::size_t k = any_row(pick);
    const double prediction = predict(fit->trained.model, single_row(source_, k))[0];
    const Decision d = sample_user_decision(prediction, source_.targets[static_cast<Eigen::Index>(k)],
                                            fit->trained.sigma_f2, cfg.user, rng);
    DataRow row = row_of(source_, k);
    row.target = d.z;
    w.push_replace(std::move(row));
  }
  return w.to_dataset();
}

}  // namespace loopsim
