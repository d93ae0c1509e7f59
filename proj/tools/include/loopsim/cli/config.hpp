#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loopsim/detectors.hpp"
#include "loopsim/errors.hpp"
#include "loopsim/model_selection.hpp"
#include "loopsim/simulation.hpp"

namespace loopsim::cli {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SyntheticSpec {
  std::size_t n = 506;
  std::size_t d = 13;
  double noise_sd = 0.2;
  std::uint64_t seed = 1;
};

/// Either a CSV file or a synthetic spec; the CSV wins when set.
struct DatasetSource {
  std::optional<std::filesystem::path> csv;
  std::string target_column = "MEDV";
  SyntheticSpec synthetic;
};

struct DetectorConfig {
  bool enabled = true;
  BaselineOptions baseline;
  double ph_delta = 0.05;
  double ph_lambda = 50.0;
  ContractionOptions contraction;
  double reference_alpha = 1.0;
  std::size_t transition_steps = 0;  // 0: one full window refresh
  bool q1 = false;
  std::string q1_rationale;
};

struct RunConfig {
  DatasetSource dataset;
  SimulationConfig sim;
  HyperGrid ridge_grid = default_ridge_grid();
  HyperGrid gbr_grid = default_gbr_grid();
  SweepRanges sweep;  // empty ranges fall back to the single-run value
  std::size_t threads = 1;
  DetectorConfig detectors;
  std::filesystem::path out_dir = "out";

  const HyperGrid& grid_for(ModelFamily family) const {
    return family == ModelFamily::kRidge ? ridge_grid : gbr_grid;
  }
  /// Sweep ranges with every empty axis replaced by the single-run value.
  SweepRanges effective_sweep() const;
};

/// Key/value pairs applied after the file, in order. Keys use the file syntax.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Parses the line-oriented `key = value` format on top of the defaults.
/// `#` starts a comment, blank lines are ignored, list values are
/// comma-separated. Unknown keys, malformed values and a CSV path combined
/// with synthetic settings are errors naming the key.
RunConfig parse_config(std::string_view text, const Overrides& overrides = {},
                       std::string_view origin = "<config>");

RunConfig parse_config_file(const std::filesystem::path& path, const Overrides& overrides = {});

/// Every recognized key with its current value, in documentation order.
nlohmann::ordered_json echo_config(const RunConfig& config);

/// One line per key: name, default value and a short description.
std::string describe_keys();

}  // namespace loopsim::cli
