#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopsim/detectors.hpp"
#include "loopsim/simulation.hpp"

namespace loopsim::cli {

/// One simulation run as reported: its sweep key, seed, result and monitors.
struct RunOutput {
  std::size_t run_id = 0;
  SweepKey key;
  std::uint64_t seed = 0;
  SimulationResult result;
  std::optional<RuntimeMonitor> monitor;
  std::optional<ChecklistReport> checklist;
};

/// A row of metrics.csv.
struct MetricsRow {
  std::size_t run_id = 0;
  std::size_t round = 0;
  bool partial = false;
  std::string model;
  double p = 0.0;
  double s = 0.0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  double r2 = 0.0;
  double mae = 0.0;
  double sigma2 = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

inline constexpr const char* kMetricsHeader = "run_id,round,partial,model,p,s,M,seed,r2,mae,sigma2";
inline constexpr const char* kStepsHeader = "run_id,step,row_id,round,prediction,z,adhered";

std::vector<MetricsRow> metrics_rows(const std::vector<RunOutput>& runs);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

/// Inverse of write_metrics_csv. Throws DataError on a malformed file.
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

void write_steps_csv(std::ostream& out, const std::vector<RunOutput>& runs);

nlohmann::ordered_json contraction_json(const ContractionReport& report);
nlohmann::ordered_json checklist_json(const ChecklistReport& report);
nlohmann::ordered_json run_json(const RunOutput& run);

}  // namespace loopsim::cli
