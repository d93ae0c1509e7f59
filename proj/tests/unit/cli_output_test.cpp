#include <set>
#include <sstream>
#include <string>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <gtest/gtest.h>
#include <json.hpp>

#include "loopsim/cli/app.hpp"
#include "test_helpers.hpp"

namespace loopsim::cli {
namespace {

namespace pt = boost::property_tree;

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

RunConfig small_config(const std::string& extra) {
  return parse_config(
      "dataset.synthetic.n = 60\n"
      "dataset.synthetic.d = 4\n"
      "grid.ridge.alpha = 0.1, 1\n"
      "grid.cv_folds = 3\n"
      "sim.steps_per_round = 7\n"
      "detectors.baseline.min_rounds = 2\n"
      "detectors.contraction.n_pairs = 20\n" +
      extra);
}

std::vector<RunOutput> small_sweep() {
  const RunConfig config = small_config("sweep.p = 0.3, 0.9\nsweep.s = 0.3, 1.2\nsweep.steps_per_round = 5, 10\n");
  return run_experiments(load_dataset(config.dataset), config, Command::kSweep);
}

TEST(MetricsCsv, HeaderAndRoundTripAreExact) {
  const std::vector<RunOutput> runs = small_sweep();
  ASSERT_EQ(runs.size(), 8u);
  const std::vector<MetricsRow> rows = metrics_rows(runs);
  std::ostringstream out;
  write_metrics_csv(out, rows);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kMetricsHeader);

  std::istringstream in(text);
  const std::vector<MetricsRow> back = read_metrics_csv(in);
  EXPECT_EQ(back, rows);

  // Parsed values reproduce the simulation records bit for bit.
  std::size_t i = 0;
  for (const RunOutput& run : runs) {
    for (const RoundRecord& r : run.result.rounds) {
      ASSERT_LT(i, back.size());
      EXPECT_EQ(back[i].run_id, run.run_id);
      EXPECT_EQ(back[i].round, r.round);
      EXPECT_EQ(back[i].partial, r.partial);
      EXPECT_EQ(back[i].p, run.key.p);
      EXPECT_EQ(back[i].s, run.key.s);
      EXPECT_EQ(back[i].m, run.key.m);
      EXPECT_EQ(back[i].seed, run.seed);
      EXPECT_EQ(back[i].r2, r.r2);
      EXPECT_EQ(back[i].mae, r.mae);
      EXPECT_EQ(back[i].sigma2, r.sigma_f2);
      ++i;
    }
  }
  EXPECT_EQ(i, back.size());
}

TEST(MetricsCsv, MalformedInputIsRejected) {
  const auto reject = [](const std::string& text) {
    std::istringstream in(text);
    EXPECT_THROW(read_metrics_csv(in), DataError) << text;
  };
  const std::string header = std::string(kMetricsHeader) + "\n";
  reject("");
  reject("run_id,round\n");
  reject(header + "0,1,0,ridge,0.5,0.3,20,1,0.9,0.1\n");
  reject(header + "0,1,0,ridge,0.5,0.3,20,1,0.9,0.1,0.01,7\n");
  reject(header + "0,1,0,ridge,0.5,0.3,20,1,abc,0.1,0.01\n");
  reject(header + "x,1,0,ridge,0.5,0.3,20,1,0.9,0.1,0.01\n");
  std::istringstream ok(header + "0,1,0,ridge,0.5,0.3,20,1,0.9,0.1,0.01\n");
  const auto rows = read_metrics_csv(ok);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].model, "ridge");
  EXPECT_EQ(rows[0].sigma2, 0.01);
}

TEST(StepsCsv, OneLinePerStepUnderTheHeader) {
  const std::vector<RunOutput> runs = small_sweep();
  std::ostringstream out;
  write_steps_csv(out, runs);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kStepsHeader);
  std::size_t steps = 0;
  for (const RunOutput& run : runs) steps += run.result.steps.size();
  EXPECT_EQ(count_of(text, "\n"), steps + 1);
}

TEST(Svg, SinglePointSeriesIsDrawnAsAMarker) {
  const std::string svg = emit_svg({{"one", {{"only", {{1.0, 0.5}}}}}}, {});
  EXPECT_EQ(count_of(svg, "<circle"), 1u);
  EXPECT_EQ(count_of(svg, "<g class=\"series\""), 1u);
}

TEST(Svg, SeriesGetDistinctStylesAndLegendEntries) {
  const Panel panel{"p = 0.7, s = 0.3",
                    {{"M = 1", {{0, 0.9}, {1, 0.8}, {2, 0.85}}}, {"M = 20", {{0, 0.9}, {1, 0.95}}}}};
  ChartOptions opts;
  opts.title = "Model: Ridge, metric: R²";
  opts.y_label = "R² & <more>";
  const std::string svg = emit_svg({panel}, opts);
  EXPECT_EQ(count_of(svg, "<g class=\"legend-entry\">"), 2u);

  std::istringstream in(svg);
  pt::ptree tree;
  ASSERT_NO_THROW(pt::read_xml(in, tree));
  const pt::ptree& root = tree.get_child("svg");
  EXPECT_EQ(root.get<std::string>("<xmlattr>.xmlns"), "http://www.w3.org/2000/svg");

  // Collect polyline styles per series, walking every group.
  std::set<std::string> styles;
  std::set<std::string> labels;
  std::size_t circles = 0;
  std::function<void(const pt::ptree&)> walk = [&](const pt::ptree& node) {
    for (const auto& [name, child] : node) {
      if (name == "g" && child.get<std::string>("<xmlattr>.class", "") == "series") {
        labels.insert(child.get<std::string>("<xmlattr>.data-label"));
        const pt::ptree& line = child.get_child("polyline");
        styles.insert(line.get<std::string>("<xmlattr>.stroke") + "|" +
                      line.get<std::string>("<xmlattr>.stroke-dasharray", "solid"));
      }
      if (name == "circle") ++circles;
      walk(child);
    }
  };
  walk(root);
  EXPECT_EQ(labels, (std::set<std::string>{"M = 1", "M = 20"}));
  EXPECT_EQ(styles.size(), 2u);
  EXPECT_EQ(circles, 5u);
  // Dash patterns differ too, so the series stay apart in greyscale.
  std::set<std::string> dashes;
  for (const std::string& s : styles) dashes.insert(s.substr(s.find('|')));
  EXPECT_EQ(dashes.size(), 2u);
}

TEST(Svg, RejectsEmptyInput) {
  EXPECT_THROW(emit_svg({}, {}), Error);
  EXPECT_THROW(emit_svg({{"empty", {{"none", {}}}}}, {}), Error);
}

TEST(Svg, XmlEscape) {
  EXPECT_EQ(xml_escape("a<b>&\"c'"), "a&lt;b&gt;&amp;&quot;c&apos;");
  EXPECT_EQ(xml_escape("R² plain"), "R² plain");
}

TEST(MetricPanels, OnePanelPerUsageAndOneSeriesPerM) {
  const std::vector<RunOutput> runs = small_sweep();
  const std::vector<Panel> panels = metric_panels(runs, ModelFamily::kRidge, true);
  ASSERT_EQ(panels.size(), 4u);
  EXPECT_EQ(panels[0].title, "p = 0.3, s = 0.3");
  EXPECT_EQ(panels[1].title, "p = 0.3, s = 1.2");
  EXPECT_EQ(panels[2].title, "p = 0.9, s = 0.3");
  EXPECT_EQ(panels[3].title, "p = 0.9, s = 1.2");
  for (const Panel& panel : panels) {
    ASSERT_EQ(panel.series.size(), 2u);
    EXPECT_EQ(panel.series[0].label, "M = 5");
    EXPECT_EQ(panel.series[1].label, "M = 10");
  }
  EXPECT_EQ(panels[0].series[0].points.size(), runs[0].result.rounds.size());
  EXPECT_EQ(panels[0].series[0].points[0].second, runs[0].result.rounds[0].r2);
  EXPECT_EQ(metric_panels(runs, ModelFamily::kRidge, false)[0].series[0].points[0].second,
            runs[0].result.rounds[0].mae);
  EXPECT_TRUE(metric_panels(runs, ModelFamily::kGbr, true).empty());
}

TEST(Execute, RepeatedRunsWriteIdenticalFiles) {
  testing::TempDir dir("exec");
  RunConfig config = small_config("sweep.p = 0.5, 0.9\nsweep.steps_per_round = 5, 10\n");
  config.out_dir = dir.path();
  std::ostringstream log;
  const auto first = execute(Command::kSweep, config, log);
  std::vector<std::string> contents;
  for (const auto& path : first) contents.push_back(testing::read_file(path));
  const auto second = execute(Command::kSweep, config, log);
  ASSERT_EQ(first, second);
  std::set<std::string> names;
  for (std::size_t i = 0; i < second.size(); ++i) {
    names.insert(second[i].filename().string());
    EXPECT_FALSE(contents[i].empty()) << second[i];
    EXPECT_EQ(contents[i], testing::read_file(second[i])) << second[i];
  }
  EXPECT_EQ(names, (std::set<std::string>{"metrics.csv", "steps.csv", "summary.json", "plot_ridge_r2.svg",
                                          "plot_ridge_mae.svg"}));

  const auto summary = nlohmann::json::parse(testing::read_file(dir.path() / "summary.json"));
  EXPECT_EQ(summary.at("command"), "sweep");
  EXPECT_EQ(summary.at("config").at("dataset.synthetic.n"), 60);
  EXPECT_EQ(summary.at("config").at("sweep.p"), nlohmann::json::array({0.5, 0.9}));
  ASSERT_EQ(summary.at("runs").size(), 4u);
  for (const auto& run : summary.at("runs")) {
    ASSERT_TRUE(run.contains("checklist"));
    EXPECT_TRUE(run.at("checklist").contains("verdict"));
    EXPECT_TRUE(run.at("checklist").contains("runtime_flags"));
  }
}

TEST(Execute, DetectWritesContractionAndChecklist) {
  testing::TempDir dir("detect");
  RunConfig config = small_config("user.p = 1\nuser.s = 0.3\n");
  config.out_dir = dir.path();
  std::ostringstream log;
  const auto files = execute(Command::kDetect, config, log);
  ASSERT_FALSE(files.empty());
  const auto summary = nlohmann::json::parse(testing::read_file(dir.path() / "summary.json"));
  EXPECT_EQ(summary.at("command"), "detect");
  const auto& contraction = summary.at("contraction");
  EXPECT_EQ(contraction.at("pairs_sampled"), 20);
  EXPECT_TRUE(contraction.contains("a_hat"));
  const auto& checklist = summary.at("checklist");
  EXPECT_TRUE(checklist.at("q2_p_gt_half_and_s_lt_one").get<bool>());
  EXPECT_FALSE(checklist.at("q3_contraction").is_null());
  EXPECT_NE(log.str().find("contraction:"), std::string::npos);
}

TEST(Execute, UnwritableOutputDirectoryIsAnError) {
  testing::TempDir dir("blocked");
  testing::write_text(dir.path() / "file", "x");
  RunConfig config = small_config("");
  config.out_dir = dir.path() / "file" / "sub";
  std::ostringstream log;
  EXPECT_THROW(execute(Command::kRun, config, log), Error);
}

}  // namespace
}  // namespace loopsim::cli
