#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "loopsim/cli/config.hpp"
#include "loopsim/cli/output.hpp"
#include "loopsim/cli/svg.hpp"
#include "loopsim/data.hpp"

namespace loopsim::cli {

enum class Command { kRun, kSweep, kDetect };

Dataset load_dataset(const DatasetSource& source);

/// `kRun` executes the single configured combination; `kSweep` expands the
/// sweep ranges. Runs come back in sweep-key order with run ids 0, 1, ...
std::vector<RunOutput> run_experiments(const Dataset& ds, const RunConfig& config, Command command);

/// Contraction estimate of one retraining round plus user steps, on the
/// configured user model and family.
ContractionReport run_contraction(const Dataset& ds, const RunConfig& config);

/// One panel per (p, s) and one series per M, for the runs of `family`.
std::vector<Panel> metric_panels(const std::vector<RunOutput>& runs, ModelFamily family, bool use_r2);

/// Runs the command and writes its files into config.out_dir. Progress goes to `log`.
/// Returns the written paths.
std::vector<std::filesystem::path> execute(Command command, const RunConfig& config, std::ostream& log);

}  // namespace loopsim::cli
