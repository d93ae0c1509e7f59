#include "loopsim/cli/app.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "loopsim/cli/format.hpp"
#include "loopsim/errors.hpp"

namespace loopsim::cli {
namespace {

using json = nlohmann::ordered_json;

RuntimeMonitor make_monitor(const DetectorConfig& d) {
  RuntimeMonitor m;
  m.baseline_options = d.baseline;
  m.drift = make_page_hinkley(d.ph_delta, d.ph_lambda, DriftDirection::kDecrease);
  return m;
}

bool same_key(const SweepKey& a, const SweepKey& b) {
  return a.family == b.family && a.p == b.p && a.s == b.s && a.m == b.m;
}

json dataset_json(const Dataset& ds, const DatasetSource& source) {
  json out;
  if (source.csv) {
    out["source"] = "csv";
    out["path"] = source.csv->generic_string();
    out["target_column"] = source.target_column;
  } else {
    out["source"] = "synthetic";
    out["n"] = source.synthetic.n;
    out["d"] = source.synthetic.d;
    out["noise_sd"] = source.synthetic.noise_sd;
    out["seed"] = source.synthetic.seed;
  }
  out["rows"] = ds.rows();
  out["cols"] = ds.cols();
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

Dataset load_dataset(const DatasetSource& source) {
  if (source.csv) return load_csv(*source.csv, source.target_column);
  const SyntheticSpec& s = source.synthetic;
  return synthesize(s.n, s.d, s.noise_sd, s.seed);
}

std::vector<RunOutput> run_experiments(const Dataset& ds, const RunConfig& config, Command command) {
  std::vector<RunOutput> outputs;
  const bool detectors = config.detectors.enabled;

  const auto finish = [&](RunOutput& out) {
    if (!detectors) return;
    ChecklistInputs in;
    in.data_from_influenced_users = config.detectors.q1;
    in.rationale = config.detectors.q1_rationale;
    in.p = out.key.p;
    in.s = out.key.s;
    in.baseline_alarm = out.monitor->baseline_alarm();
    in.drift_alarm = out.monitor->drift_alarm();
    out.checklist = build_checklist(in);
  };

  if (command == Command::kRun) {
    SimulationConfig cfg = config.sim;
    cfg.grid = config.grid_for(cfg.family);
    RunOutput out;
    out.key = {cfg.family, cfg.user.p, cfg.user.s, cfg.steps_per_round};
    out.seed = cfg.master_seed;
    if (detectors) out.monitor = make_monitor(config.detectors);
    RoundObserver observer;
    if (detectors) observer = [&m = *out.monitor](const RoundContext& ctx) { m.observe(ctx); };
    out.result = run_simulation(ds, cfg, observer);
    finish(out);
    outputs.push_back(std::move(out));
    return outputs;
  }

  const SweepRanges all = config.effective_sweep();
  for (ModelFamily family : all.families) {
    SweepRanges ranges = all;
    ranges.families = {family};
    SimulationConfig base = config.sim;
    base.family = family;
    base.grid = config.grid_for(family);

    const std::vector<SweepKey> keys = sweep_keys(ranges);
    std::vector<RuntimeMonitor> monitors(keys.size(), make_monitor(config.detectors));
    std::function<RoundObserver(const SweepKey&)> factory;
    if (detectors) {
      factory = [&](const SweepKey& key) -> RoundObserver {
        for (std::size_t i = 0; i < keys.size(); ++i) {
          if (same_key(keys[i], key)) {
            return [&m = monitors[i]](const RoundContext& ctx) { m.observe(ctx); };
          }
        }
        throw InternalError("sweep: observer requested for an unknown combination");
      };
    }
    std::vector<SweepRun> runs = sweep(ds, base, ranges, config.threads, factory);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      RunOutput out;
      out.run_id = outputs.size();
      out.key = runs[i].key;
      out.seed = runs[i].seed;
      out.result = std::move(runs[i].result);
      if (detectors) out.monitor = std::move(monitors[i]);
      finish(out);
      outputs.push_back(std::move(out));
    }
  }
  return outputs;
}

ContractionReport run_contraction(const Dataset& ds, const RunConfig& config) {
  const std::size_t capacity = window_capacity(ds.rows(), config.sim.window_fraction);
  const std::size_t steps = config.detectors.transition_steps ? config.detectors.transition_steps : capacity;
  SimulationConfig cfg = config.sim;
  cfg.grid = config.grid_for(cfg.family);
  const RoundTransition transition(ds, cfg, steps);
  return estimate_contraction(
      [&transition](const Dataset& w, std::uint64_t seed) { return transition(w, seed); },
      reference_performance(config.detectors.reference_alpha, config.sim.train_fraction),
      bootstrap_sampler(ds, capacity), config.detectors.contraction);
}

std::vector<Panel> metric_panels(const std::vector<RunOutput>& runs, ModelFamily family, bool use_r2) {
  std::vector<Panel> panels;
  std::vector<std::pair<double, double>> panel_keys;
  for (const RunOutput& run : runs) {
    if (run.key.family != family) continue;
    const std::pair<double, double> ps{run.key.p, run.key.s};
    std::size_t idx = 0;
    while (idx < panel_keys.size() && panel_keys[idx] != ps) ++idx;
    if (idx == panel_keys.size()) {
      panel_keys.push_back(ps);
      panels.push_back({"p = " + format_number(ps.first) + ", s = " + format_number(ps.second), {}});
    }
    Series series;
    series.label = "M = " + std::to_string(run.key.m);
    for (const RoundRecord& r : run.result.rounds) {
      series.points.emplace_back(static_cast<double>(r.round), use_r2 ? r.r2 : r.mae);
    }
    panels[idx].series.push_back(std::move(series));
  }
  return panels;
}

std::vector<std::filesystem::path> execute(Command command, const RunConfig& config, std::ostream& log) {
  const Dataset ds = load_dataset(config.dataset);
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec || !std::filesystem::is_directory(config.out_dir)) {
    throw Error("cannot create output directory '" + config.out_dir.string() + "'");
  }
  const char* command_name = command == Command::kRun ? "run" : command == Command::kSweep ? "sweep" : "detect";
  log << "dataset: " << ds.rows() << " rows x " << ds.cols() << " features\n";

  json summary;
  summary["command"] = command_name;
  summary["config"] = echo_config(config);
  summary["dataset"] = dataset_json(ds, config.dataset);

  std::vector<std::pair<std::filesystem::path, std::string>> files;

  if (command == Command::kDetect) {
    const ContractionReport report = run_contraction(ds, config);
    ChecklistInputs in;
    in.data_from_influenced_users = config.detectors.q1;
    in.rationale = config.detectors.q1_rationale;
    in.p = config.sim.user.p;
    in.s = config.sim.user.s;
    in.contraction = report;
    const ChecklistReport checklist = build_checklist(in);
    summary["contraction"] = contraction_json(report);
    summary["checklist"] = checklist_json(checklist);
    log << "contraction: " << contraction_status_name(report.status) << ", A_hat = " << format_number(report.a_hat)
        << " (" << report.pairs_sampled - report.pairs_discarded << " of " << report.pairs_sampled
        << " pairs retained)\n";
    log << "checklist: " << (checklist.loop_indicated ? "loop indicated" : "no loop indicated") << '\n';
  } else {
    const std::vector<RunOutput> runs = run_experiments(ds, config, command);
    std::ostringstream metrics, steps;
    write_metrics_csv(metrics, metrics_rows(runs));
    write_steps_csv(steps, runs);
    files.emplace_back("metrics.csv", metrics.str());
    files.emplace_back("steps.csv", steps.str());

    json run_list = json::array();
    for (const RunOutput& run : runs) {
      run_list.push_back(run_json(run));
      const RoundRecord& last = run.result.rounds.back();
      log << "run " << run.run_id << " [" << family_name(run.key.family) << " p=" << format_number(run.key.p)
          << " s=" << format_number(run.key.s) << " M=" << run.key.m << "]: " << run.result.rounds.size()
          << " rounds, R2 " << format_number(run.result.rounds.front().r2) << " -> " << format_number(last.r2);
      if (run.checklist) log << ", " << (run.checklist->loop_indicated ? "loop indicated" : "no loop indicated");
      log << '\n';
    }
    summary["runs"] = run_list;

    for (ModelFamily family : {ModelFamily::kRidge, ModelFamily::kGbr}) {
      for (const bool use_r2 : {true, false}) {
        const std::vector<Panel> panels = metric_panels(runs, family, use_r2);
        if (panels.empty()) continue;
        ChartOptions opts;
        opts.title = std::string("Model: ") + (family == ModelFamily::kRidge ? "Ridge" : "GBR") +
                     ", metric: " + (use_r2 ? "R²" : "MAE");
        opts.y_label = use_r2 ? "R² (unitless, log-price space)" : "MAE (log-price units)";
        files.emplace_back("plot_" + std::string(family_name(family)) + "_" + (use_r2 ? "r2" : "mae") + ".svg",
                           emit_svg(panels, opts));
      }
    }
  }
  files.emplace_back("summary.json", summary.dump(2) + "\n");

  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    const std::filesystem::path path = config.out_dir / name;
    write_file(path, content);
    written.push_back(path);
  }
  return written;
}

}  // namespace loopsim::cli
