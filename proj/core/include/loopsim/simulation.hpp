#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "loopsim/data.hpp"
#include "loopsim/model_selection.hpp"
#include "loopsim/random.hpp"

namespace loopsim {

/// How users react to the system's estimate. With probability p a user adopts
/// it and draws log-price z ~ Normal(prediction, s * sigma_f2); otherwise the
/// user keeps the true log-price.
struct UserDecisionModel {
  double p = 0.7;
  double s = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Decision {
  double z = 0.0;
  bool adhered = false;
};

/// Always consumes one uniform and one normal variate from `rng`, whatever
/// the outcome, so runs with different p stay aligned draw for draw.
Decision sample_user_decision(double prediction, double true_log_y, double sigma_f2,
                              const UserDecisionModel& user, RandomEngine& rng);

struct SimulationConfig {
  double window_fraction = 0.3;
  double train_fraction = 0.75;
  std::size_t steps_per_round = 20;  // M
  ModelFamily family = ModelFamily::kRidge;
  std::optional<HyperGrid> grid;  // default_grid(family) when empty
  UserDecisionModel user;
  std::uint64_t master_seed = 0;

  HyperGrid effective_grid() const { return grid ? *grid : default_grid(family); }
  void validate(std::size_t n) const;
};

struct RoundRecord {
  std::size_t round = 0;
  double r2 = 0.0;
  double mae = 0.0;
  double sigma_f2 = 0.0;
  Hyperparams hyperparams;
  std::size_t steps_consumed = 0;
  bool partial = false;  // fewer than M steps since the previous retrain
};

struct StepRecord {
  std::size_t step = 0;
  RowId row_id = 0;
  std::size_t round = 0;  // round whose model produced `prediction`
  double prediction = 0.0;
  double z = 0.0;
  bool adhered = false;
};

struct SimulationResult {
  SimulationConfig config;
  std::vector<RoundRecord> rounds;
  std::vector<StepRecord> steps;
  Dataset final_window;
};

/// Everything known at the end of a (re)training round.
struct RoundContext {
  std::size_t round = 0;
  std::uint64_t split_seed = 0;
  const Dataset& window;
  const TrainHoldout& parts;
  const TrainedModel& trained;
};

using RoundObserver = std::function<void(const RoundContext&)>;

std::uint64_t round_split_seed(std::uint64_t master_seed, std::size_t round) noexcept;
std::uint64_t round_cv_seed(std::uint64_t master_seed, std::size_t round) noexcept;
std::uint64_t decision_stream_seed(std::uint64_t master_seed, std::uint64_t user_seed) noexcept;

/// Split, grid-search, fit and evaluate on one window: a single retraining round.
struct RoundFit {
  TrainHoldout parts;
  TrainedModel trained;
};
RoundFit fit_round(const Dataset& window, const SimulationConfig& config, std::size_t round);

/// The closed-loop experiment. Starts from the first floor(window_fraction * n)
/// rows, retrains every M steps on the current window and once more after the
/// last step if the tail round is partial.
SimulationResult run_simulation(const Dataset& ds, const SimulationConfig& config,
                                const RoundObserver& observer = {});

struct SweepRanges {
  std::vector<double> p;
  std::vector<double> s;
  std::vector<std::size_t> m;
  std::vector<ModelFamily> families;
};

struct SweepKey {
  ModelFamily family = ModelFamily::kRidge;
  double p = 0.0;
  double s = 0.0;
  std::size_t m = 0;
};

struct SweepRun {
  SweepKey key;
  std::uint64_t seed = 0;
  SimulationResult result;
};

/// Seed of one sweep combination. Depends only on its key, never on scheduling.
std::uint64_t sweep_run_seed(std::uint64_t master_seed, const SweepKey& key) noexcept;

/// Combinations ordered by family, then p, then s, then M.
std::vector<SweepKey> sweep_keys(const SweepRanges& ranges);

/// One independent run per combination. `threads` = 0 picks hardware concurrency.
/// Results come back in sweep_keys order regardless of completion order.
std::vector<SweepRun> sweep(const Dataset& ds, const SimulationConfig& base,
                            const SweepRanges& ranges, std::size_t threads = 1,
                            const std::function<RoundObserver(const SweepKey&)>& observers = {});

/// The loop run for `steps` user interactions on rows drawn with replacement
/// from `source`, retraining every config.steps_per_round steps exactly as
/// run_simulation does: a map from window to window. The same seed gives both
/// arguments of a pair the same incoming rows and the same random draws.
class RoundTransition {
 public:
  RoundTransition(Dataset source, SimulationConfig config, std::size_t steps);

  Dataset operator()(const Dataset& window, std::uint64_t seed) const;

 private:
  Dataset source_;
  SimulationConfig config_;
  std::size_t steps_;
};

}  // namespace loopsim
