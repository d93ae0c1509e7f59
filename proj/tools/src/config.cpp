#include "loopsim/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "loopsim/cli/format.hpp"

namespace loopsim::cli {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad_value(std::string_view key, std::string_view expected, std::string_view got) {
  throw ConfigError(std::string(key) + ": expected " + std::string(expected) + ", got '" +
                    std::string(got) + "'");
}

double real(std::string_view key, std::string_view v) {
  double out = 0.0;
  if (!parse_number(v, out) || !std::isfinite(out)) bad_value(key, "a real number", v);
  return out;
}

double real_in(std::string_view key, std::string_view v, double lo, double hi, bool open) {
  const double x = real(key, v);
  const bool ok = open ? (x > lo && x < hi) : (x >= lo && x <= hi);
  if (!ok) {
    const std::string range = (open ? "(" : "[") + format_number(lo) + ", " + format_number(hi) +
                              (open ? ")" : "]");
    bad_value(key, "a real number in " + range, v);
  }
  return x;
}

double non_negative(std::string_view key, std::string_view v) {
  const double x = real(key, v);
  if (x < 0.0) bad_value(key, "a non-negative real number", v);
  return x;
}

double positive(std::string_view key, std::string_view v) {
  const double x = real(key, v);
  if (x <= 0.0) bad_value(key, "a positive real number", v);
  return x;
}

std::uint64_t unsigned_int(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  if (!parse_number(v, out)) bad_value(key, "an unsigned integer", v);
  return out;
}

std::size_t count(std::string_view key, std::string_view v, std::size_t min) {
  const std::uint64_t x = unsigned_int(key, v);
  if (x < min) bad_value(key, "an integer >= " + std::to_string(min), v);
  return static_cast<std::size_t>(x);
}

bool boolean(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, "true or false", v);
}

std::string text(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return std::string(v);
}

std::vector<std::string_view> items(std::string_view key, std::string_view v) {
  std::vector<std::string_view> out;
  v = trim(v);
  if (v.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = v.find(',', start);
    const std::string_view item = trim(v.substr(start, comma - start));
    if (item.empty()) bad_value(key, "a comma-separated list without empty items", v);
    out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class F>
auto list_of(std::string_view key, std::string_view v, F&& parse_one) {
  std::vector<decltype(parse_one(key, std::string_view{}))> out;
  for (std::string_view item : items(key, v)) out.push_back(parse_one(key, item));
  return out;
}

std::vector<double> grid_values(std::string_view key, std::string_view v) {
  auto values = list_of(key, v, real);
  if (values.empty()) bad_value(key, "a non-empty list", v);
  return values;
}

ModelFamily family(std::string_view key, std::string_view v) {
  try {
    return parse_family(trim(v));
  } catch (const Error&) {
    bad_value(key, "ridge or gbr", v);
  }
}

void set_axis(HyperGrid& grid, const std::string& name, std::vector<double> values) {
  for (auto& [axis, candidates] : grid.axes) {
    if (axis == name) {
      candidates = std::move(values);
      return;
    }
  }
  grid.axes.emplace_back(name, std::move(values));
}

json axis_json(const HyperGrid& grid, std::string_view name) {
  for (const auto& [axis, candidates] : grid.axes) {
    if (axis == name) return json(candidates);
  }
  return json::array();
}

struct Key {
  std::string_view name;
  std::string_view help;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<json(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    // Dataset source.
    k.push_back({"dataset.csv", "CSV file with a header row; excludes dataset.synthetic.*",
                 [](RunConfig& c, auto, auto v) { c.dataset.csv = text(v); },
                 [](const RunConfig& c) {
                   return c.dataset.csv ? json(c.dataset.csv->generic_string()) : json(nullptr);
                 }});
    k.push_back({"dataset.target_column", "price column of the CSV, log-transformed on load",
                 [](RunConfig& c, auto, auto v) { c.dataset.target_column = text(v); },
                 [](const RunConfig& c) { return json(c.dataset.target_column); }});
    k.push_back({"dataset.synthetic.n", "rows of the synthetic dataset",
                 [](RunConfig& c, auto key, auto v) { c.dataset.synthetic.n = count(key, v, 4); },
                 [](const RunConfig& c) { return json(c.dataset.synthetic.n); }});
    k.push_back({"dataset.synthetic.d", "feature columns of the synthetic dataset",
                 [](RunConfig& c, auto key, auto v) { c.dataset.synthetic.d = count(key, v, 1); },
                 [](const RunConfig& c) { return json(c.dataset.synthetic.d); }});
    k.push_back({"dataset.synthetic.noise_sd", "noise standard deviation, log-price units",
                 [](RunConfig& c, auto key, auto v) { c.dataset.synthetic.noise_sd = non_negative(key, v); },
                 [](const RunConfig& c) { return json(c.dataset.synthetic.noise_sd); }});
    k.push_back({"dataset.synthetic.seed", "seed of the synthetic dataset",
                 [](RunConfig& c, auto key, auto v) { c.dataset.synthetic.seed = unsigned_int(key, v); },
                 [](const RunConfig& c) { return json(c.dataset.synthetic.seed); }});
    // Simulation.
    k.push_back({"sim.window_fraction", "initial window as a fraction of the rows",
                 [](RunConfig& c, auto key, auto v) { c.sim.window_fraction = real_in(key, v, 0, 1, true); },
                 [](const RunConfig& c) { return json(c.sim.window_fraction); }});
    k.push_back({"sim.train_fraction", "training share of each round's split",
                 [](RunConfig& c, auto key, auto v) { c.sim.train_fraction = real_in(key, v, 0, 1, true); },
                 [](const RunConfig& c) { return json(c.sim.train_fraction); }});
    k.push_back({"sim.steps_per_round", "M: user steps between retrains",
                 [](RunConfig& c, auto key, auto v) { c.sim.steps_per_round = count(key, v, 1); },
                 [](const RunConfig& c) { return json(c.sim.steps_per_round); }});
    k.push_back({"sim.model", "model family: ridge or gbr",
                 [](RunConfig& c, auto key, auto v) { c.sim.family = family(key, v); },
                 [](const RunConfig& c) { return json(std::string(family_name(c.sim.family))); }});
    k.push_back({"sim.seed", "master seed of the run",
                 [](RunConfig& c, auto key, auto v) { c.sim.master_seed = unsigned_int(key, v); },
                 [](const RunConfig& c) { return json(c.sim.master_seed); }});
    // Users.
    k.push_back({"user.p", "usage probability p in [0, 1]",
                 [](RunConfig& c, auto key, auto v) { c.sim.user.p = real_in(key, v, 0, 1, false); },
                 [](const RunConfig& c) { return json(c.sim.user.p); }});
    k.push_back({"user.s", "adherence variance multiplier s >= 0",
                 [](RunConfig& c, auto key, auto v) { c.sim.user.s = non_negative(key, v); },
                 [](const RunConfig& c) { return json(c.sim.user.s); }});
    k.push_back({"user.seed", "seed component of the user decision stream",
                 [](RunConfig& c, auto key, auto v) { c.sim.user.seed = unsigned_int(key, v); },
                 [](const RunConfig& c) { return json(c.sim.user.seed); }});
    // Hyperparameter grids.
    k.push_back({"grid.cv_folds", "cross-validation folds for both families",
                 [](RunConfig& c, auto key, auto v) {
                   const auto folds = static_cast<int>(count(key, v, 2));
                   c.ridge_grid.cv_folds = folds;
                   c.gbr_grid.cv_folds = folds;
                 },
                 [](const RunConfig& c) { return json(c.ridge_grid.cv_folds); }});
    const auto grid_key = [&k](std::string_view name, std::string_view help, bool ridge, std::string axis) {
      k.push_back({name, help,
                   [ridge, axis](RunConfig& c, std::string_view key, std::string_view v) {
                     set_axis(ridge ? c.ridge_grid : c.gbr_grid, axis, grid_values(key, v));
                   },
                   [ridge, axis](const RunConfig& c) { return axis_json(ridge ? c.ridge_grid : c.gbr_grid, axis); }});
    };
    grid_key("grid.ridge.alpha", "ridge penalty candidates", true, "alpha");
    grid_key("grid.gbr.n_estimators", "boosting iteration candidates", false, "n_estimators");
    grid_key("grid.gbr.max_depth", "tree depth candidates", false, "max_depth");
    grid_key("grid.gbr.learning_rate", "shrinkage candidates", false, "learning_rate");
    grid_key("grid.gbr.huber_delta_quantile", "Huber delta residual quantile candidates", false,
             "huber_delta_quantile");
    grid_key("grid.gbr.min_samples_leaf", "minimum rows per leaf candidates", false, "min_samples_leaf");
    // Sweep.
    k.push_back({"sweep.p", "p values to sweep (empty: user.p)",
                 [](RunConfig& c, auto key, auto v) {
                   c.sweep.p = list_of(key, v, [](std::string_view kk, std::string_view x) {
                     return real_in(kk, x, 0, 1, false);
                   });
                 },
                 [](const RunConfig& c) { return json(c.sweep.p); }});
    k.push_back({"sweep.s", "s values to sweep (empty: user.s)",
                 [](RunConfig& c, auto key, auto v) { c.sweep.s = list_of(key, v, non_negative); },
                 [](const RunConfig& c) { return json(c.sweep.s); }});
    k.push_back({"sweep.steps_per_round", "M values to sweep (empty: sim.steps_per_round)",
                 [](RunConfig& c, auto key, auto v) {
                   c.sweep.m = list_of(key, v, [](std::string_view kk, std::string_view x) {
                     return count(kk, x, 1);
                   });
                 },
                 [](const RunConfig& c) { return json(c.sweep.m); }});
    k.push_back({"sweep.models", "model families to sweep (empty: sim.model)",
                 [](RunConfig& c, auto key, auto v) { c.sweep.families = list_of(key, v, family); },
                 [](const RunConfig& c) {
                   json out = json::array();
                   for (ModelFamily f : c.sweep.families) out.push_back(std::string(family_name(f)));
                   return out;
                 }});
    k.push_back({"sweep.threads", "parallel runs (0: one per hardware thread)",
                 [](RunConfig& c, auto key, auto v) { c.threads = count(key, v, 0); },
                 [](const RunConfig& c) { return json(c.threads); }});
    // Detectors.
    k.push_back({"detectors.enabled", "attach the baseline and drift monitors to every run",
                 [](RunConfig& c, auto key, auto v) { c.detectors.enabled = boolean(key, v); },
                 [](const RunConfig& c) { return json(c.detectors.enabled); }});
    k.push_back({"detectors.baseline.alpha", "penalty of the frozen ridge baseline",
                 [](RunConfig& c, auto key, auto v) { c.detectors.baseline.alpha = non_negative(key, v); },
                 [](const RunConfig& c) { return json(c.detectors.baseline.alpha); }});
    k.push_back({"detectors.baseline.rho_threshold", "Spearman rho above which the baseline alarms",
                 [](RunConfig& c, auto key, auto v) {
                   c.detectors.baseline.rho_threshold = real_in(key, v, -1, 1, false);
                 },
                 [](const RunConfig& c) { return json(c.detectors.baseline.rho_threshold); }});
    k.push_back({"detectors.baseline.min_rounds", "rounds needed before the baseline may alarm",
                 [](RunConfig& c, auto key, auto v) { c.detectors.baseline.min_rounds = count(key, v, 2); },
                 [](const RunConfig& c) { return json(c.detectors.baseline.min_rounds); }});
    k.push_back({"detectors.page_hinkley.delta", "Page-Hinkley tolerance",
                 [](RunConfig& c, auto key, auto v) { c.detectors.ph_delta = non_negative(key, v); },
                 [](const RunConfig& c) { return json(c.detectors.ph_delta); }});
    k.push_back({"detectors.page_hinkley.lambda", "Page-Hinkley alarm threshold",
                 [](RunConfig& c, auto key, auto v) { c.detectors.ph_lambda = positive(key, v); },
                 [](const RunConfig& c) { return json(c.detectors.ph_lambda); }});
    k.push_back({"detectors.contraction.n_pairs", "window pairs sampled by the contraction estimate",
                 [](RunConfig& c, auto key, auto v) { c.detectors.contraction.n_pairs = count(key, v, 20); },
                 [](const RunConfig& c) { return json(c.detectors.contraction.n_pairs); }});
    k.push_back({"detectors.contraction.epsilon_floor", "pairs closer than this are discarded",
                 [](RunConfig& c, auto key, auto v) { c.detectors.contraction.epsilon_floor = positive(key, v); },
                 [](const RunConfig& c) { return json(c.detectors.contraction.epsilon_floor); }});
    k.push_back({"detectors.contraction.margin", "contraction requires A_hat < 1 - margin",
                 [](RunConfig& c, auto key, auto v) { c.detectors.contraction.margin = real_in(key, v, 0, 1, false); },
                 [](const RunConfig& c) { return json(c.detectors.contraction.margin); }});
    k.push_back({"detectors.contraction.quantile", "quantile of the ratios reported as A_hat",
                 [](RunConfig& c, auto key, auto v) { c.detectors.contraction.quantile = real_in(key, v, 0, 1, false); },
                 [](const RunConfig& c) { return json(c.detectors.contraction.quantile); }});
    k.push_back({"detectors.contraction.seed", "seed of the pair sampler",
                 [](RunConfig& c, auto key, auto v) { c.detectors.contraction.seed = unsigned_int(key, v); },
                 [](const RunConfig& c) { return json(c.detectors.contraction.seed); }});
    k.push_back({"detectors.contraction.reference_alpha", "penalty of the reference ridge scoring windows",
                 [](RunConfig& c, auto key, auto v) { c.detectors.reference_alpha = non_negative(key, v); },
                 [](const RunConfig& c) { return json(c.detectors.reference_alpha); }});
    k.push_back({"detectors.contraction.transition_steps", "user steps per transition (0: window size)",
                 [](RunConfig& c, auto key, auto v) { c.detectors.transition_steps = count(key, v, 0); },
                 [](const RunConfig& c) { return json(c.detectors.transition_steps); }});
    // Checklist.
    k.push_back({"checklist.q1", "training data comes from users influenced by the system",
                 [](RunConfig& c, auto key, auto v) { c.detectors.q1 = boolean(key, v); },
                 [](const RunConfig& c) { return json(c.detectors.q1); }});
    k.push_back({"checklist.q1_rationale", "free text recorded next to checklist.q1",
                 [](RunConfig& c, auto, auto v) { c.detectors.q1_rationale = text(v); },
                 [](const RunConfig& c) { return json(c.detectors.q1_rationale); }});
    // Output.
    k.push_back({"output.dir", "directory receiving CSV, JSON and SVG files",
                 [](RunConfig& c, auto, auto v) { c.out_dir = text(v); },
                 [](const RunConfig& c) { return json(c.out_dir.generic_string()); }});
    return k;
  }();
  return table;
}

const Key& find_key(std::string_view name, std::string_view where) {
  for (const Key& k : keys()) {
    if (k.name == name) return k;
  }
  throw ConfigError(std::string(where) + "unknown key '" + std::string(name) + "'");
}

}  // namespace

SweepRanges RunConfig::effective_sweep() const {
  SweepRanges r = sweep;
  if (r.p.empty()) r.p = {sim.user.p};
  if (r.s.empty()) r.s = {sim.user.s};
  if (r.m.empty()) r.m = {sim.steps_per_round};
  if (r.families.empty()) r.families = {sim.family};
  return r;
}

RunConfig parse_config(std::string_view text_in, const Overrides& overrides, std::string_view origin) {
  RunConfig config;
  std::set<std::string, std::less<>> assigned;

  const auto assign = [&](std::string_view name, std::string_view value, const std::string& where) {
    const Key& key = find_key(name, where);
    try {
      key.set(config, key.name, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    assigned.emplace(name);
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text_in.size()) {
    const std::size_t eol = std::min(text_in.find('\n', pos), text_in.size());
    std::string_view line = text_in.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string_view name = trim(line.substr(0, eq));
    if (name.empty()) throw ConfigError(where + "missing key before '='");
    assign(name, line.substr(eq + 1), where);
  }
  for (const auto& [name, value] : overrides) assign(name, value, "override: ");

  const bool synthetic_set =
      std::any_of(assigned.begin(), assigned.end(),
                  [](const std::string& k) { return k.starts_with("dataset.synthetic."); });
  if (config.dataset.csv && synthetic_set) {
    throw ConfigError("conflicting dataset sources: dataset.csv together with dataset.synthetic.*");
  }
  return config;
}

RunConfig parse_config_file(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides, path.string());
}

nlohmann::ordered_json echo_config(const RunConfig& config) {
  json out = json::object();
  for (const Key& k : keys()) out[std::string(k.name)] = k.get(config);
  return out;
}

std::string describe_keys() {
  const RunConfig defaults;
  std::size_t width = 0;
  for (const Key& k : keys()) width = std::max(width, k.name.size());
  std::string out;
  for (const Key& k : keys()) {
    json v = k.get(defaults);
    std::string shown = v.is_null() ? "(unset)" : v.is_string() ? v.get<std::string>() : v.dump();
    if (shown.empty()) shown = "\"\"";
    out += "  " + std::string(k.name) + std::string(width - k.name.size() + 2, ' ') + shown + "  " +
           std::string(k.help) + "\n";
  }
  return out;
}

}  // namespace loopsim::cli
