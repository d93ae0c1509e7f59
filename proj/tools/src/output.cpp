#include "loopsim/cli/output.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "loopsim/cli/format.hpp"
#include "loopsim/errors.hpp"

namespace loopsim::cli {
namespace {

using json = nlohmann::ordered_json;

// nlohmann writes NaN as null; keep that explicit for readers of the summary.
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json hyperparams_json(const Hyperparams& hp) {
  json out = json::object();
  for (const auto& [name, value] : hp.items()) out[name] = value;
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::vector<MetricsRow> metrics_rows(const std::vector<RunOutput>& runs) {
  std::vector<MetricsRow> rows;
  for (const RunOutput& run : runs) {
    for (const RoundRecord& r : run.result.rounds) {
      rows.push_back({run.run_id, r.round, r.partial, std::string(family_name(run.key.family)), run.key.p,
                      run.key.s, run.key.m, run.seed, r.r2, r.mae, r.sigma_f2});
    }
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows) {
    out << r.run_id << ',' << r.round << ',' << (r.partial ? 1 : 0) << ',' << r.model << ','
        << format_number(r.p) << ',' << format_number(r.s) << ',' << r.m << ',' << r.seed << ','
        << format_number(r.r2) << ',' << format_number(r.mae) << ',' << format_number(r.sigma2) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw DataError("metrics csv: unexpected header '" + line + "'");
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    const auto fail = [&](const char* what) {
      return DataError("metrics csv line " + std::to_string(line_no) + ": " + what);
    };
    if (f.size() != 11) throw fail("expected 11 fields");
    MetricsRow r;
    std::uint64_t u = 0;
    if (!parse_number(f[0], u)) throw fail("bad run_id");
    r.run_id = static_cast<std::size_t>(u);
    if (!parse_number(f[1], u)) throw fail("bad round");
    r.round = static_cast<std::size_t>(u);
    if (f[2] != "0" && f[2] != "1") throw fail("bad partial flag");
    r.partial = f[2] == "1";
    r.model = f[3];
    if (!parse_number(f[4], r.p) || !parse_number(f[5], r.s)) throw fail("bad p or s");
    if (!parse_number(f[6], u)) throw fail("bad M");
    r.m = static_cast<std::size_t>(u);
    if (!parse_number(f[7], r.seed)) throw fail("bad seed");
    if (!parse_number(f[8], r.r2) || !parse_number(f[9], r.mae) || !parse_number(f[10], r.sigma2)) {
      throw fail("bad metric value");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_steps_csv(std::ostream& out, const std::vector<RunOutput>& runs) {
  out << kStepsHeader << '\n';
  for (const RunOutput& run : runs) {
    for (const StepRecord& s : run.result.steps) {
      out << run.run_id << ',' << s.step << ',' << s.row_id << ',' << s.round << ','
          << format_number(s.prediction) << ',' << format_number(s.z) << ',' << (s.adhered ? 1 : 0) << '\n';
    }
  }
}

json contraction_json(const ContractionReport& report) {
  json out;
  out["status"] = std::string(contraction_status_name(report.status));
  out["contraction_detected"] = report.contraction_detected;
  out["a_hat"] = number_or_null(report.a_hat);
  out["pairs_sampled"] = report.pairs_sampled;
  out["pairs_discarded"] = report.pairs_discarded;
  out["epsilon_floor"] = report.epsilon_floor;
  out["margin"] = report.margin;
  out["quantile"] = report.quantile;
  out["ratios"] = report.ratios;
  return out;
}

json checklist_json(const ChecklistReport& report) {
  json out;
  out["q1_data_from_influenced_users"] = report.q1_data_from_influenced_users;
  out["q1_rationale"] = report.q1_rationale;
  out["q2_p_gt_half_and_s_lt_one"] = report.q2_p_gt_half_and_s_lt_one;
  out["q3_contraction"] = report.q3_contraction ? contraction_json(*report.q3_contraction) : json(nullptr);
  json flags;
  flags["baseline_alarm"] = report.baseline_alarm ? json(*report.baseline_alarm) : json(nullptr);
  flags["drift_alarm"] = report.drift_alarm ? json(*report.drift_alarm) : json(nullptr);
  out["runtime_flags"] = flags;
  out["verdict"] = report.loop_indicated ? "loop indicated" : "no loop indicated";
  out["loop_indicated"] = report.loop_indicated;
  return out;
}

json run_json(const RunOutput& run) {
  const SimulationResult& res = run.result;
  json out;
  out["run_id"] = run.run_id;
  out["model"] = std::string(family_name(run.key.family));
  out["p"] = run.key.p;
  out["s"] = run.key.s;
  out["M"] = run.key.m;
  out["seed"] = run.seed;
  out["rounds"] = res.rounds.size();
  out["steps"] = res.steps.size();
  std::size_t adhered = 0;
  for (const StepRecord& s : res.steps) adhered += s.adhered ? 1 : 0;
  out["adhered_steps"] = adhered;
  if (!res.rounds.empty()) {
    out["initial_r2"] = res.rounds.front().r2;
    out["final_r2"] = res.rounds.back().r2;
    out["initial_mae"] = res.rounds.front().mae;
    out["final_mae"] = res.rounds.back().mae;
  }
  json hp = json::array();
  for (const RoundRecord& r : res.rounds) hp.push_back(hyperparams_json(r.hyperparams));
  out["hyperparams_per_round"] = hp;

  if (run.monitor && run.monitor->baseline) {
    const BaselineMonitorState& b = *run.monitor->baseline;
    json det;
    det["baseline"] = {{"rho", b.rho},
                       {"alarm", b.alarm},
                       {"r2_series", b.r2_series},
                       {"mae_series", b.mae_series}};
    const PageHinkleyState& ph = run.monitor->drift;
    det["page_hinkley"] = {{"direction", ph.direction == DriftDirection::kDecrease ? "decrease" : "increase"},
                           {"delta", ph.delta},
                           {"lambda", ph.lambda},
                           {"statistic", ph.statistic()},
                           {"alarm", ph.alarm}};
    out["detectors"] = det;
  }
  if (run.checklist) out["checklist"] = checklist_json(*run.checklist);
  return out;
}

}  // namespace loopsim::cli
