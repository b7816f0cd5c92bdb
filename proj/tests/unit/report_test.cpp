#include <gtest/gtest.h>

#include <filesystem>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "ipr/error.hpp"
#include "ipr/io.hpp"
#include "ipr/report/config.hpp"
#include "ipr/report/emit.hpp"
#include "ipr/report/pipeline.hpp"
#include "oracles.hpp"

using namespace ipr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ipr-report-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DatasetSensitivity score(ExplainerId e, const std::string& arch, double s, double lo, double hi) {
  DatasetSensitivity d;
  d.explainer = e;
  d.architecture_id = arch;
  d.s_I = s;
  d.ci = {lo, hi};
  return d;
}

double attr(const std::string& element, const std::string& name) {
  const std::regex re(name + "=\"([-0-9.e]+)\"");
  std::smatch m;
  if (!std::regex_search(element, m, re)) throw std::runtime_error("no attribute " + name + " in " + element);
  return std::stod(m[1]);
}

std::vector<std::string> elements(const std::string& svg, const std::string& tag, const std::string& cls) {
  std::vector<std::string> out;
  const std::regex re("<" + tag + " class=\"" + cls + "\"[^>]*/>");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

ArchitectureReport small_report(const std::string& arch) {
  RunConfig config;
  config.dataset.num_images = 3;
  config.ipr.explainers = {ExplainerId::Gradients, ExplainerId::GuidedBP};
  config.ipr.bootstrap_resamples = 200;
  ArchitectureReport r = run_ipr(ipr::testing::trained_toy(arch), evaluation_dataset(config), config.ipr);
  return r;
}

}  // namespace

TEST(Config, MinimalConfigFillsDefaults) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c.architectures, (std::vector<std::string>{"toy-seq-3", "toy-res-4"}));
  EXPECT_EQ(c.dataset.num_images, 20u);
  EXPECT_EQ(c.ipr.explainers, default_explainers());
  EXPECT_EQ(c.ipr.bootstrap_resamples, 1000u);
  EXPECT_EQ(c.ipr.bootstrap_level, 0.9);
  EXPECT_EQ(c.ipr.threshold_rule, ThresholdRule::AtMost);
  EXPECT_EQ(c.ipr.explainer.ig_steps, 64u);
  EXPECT_TRUE(c.use_cache);
}

TEST(Config, FullConfigParses) {
  const RunConfig c = parse_config(R"({
    "architectures": ["toy-seq-5"],
    "dataset": {"num_images": 8, "image_size": 12, "num_classes": 3, "seed": 3, "train_images": 60},
    "train": {"learning_rate": 0.1, "epochs": 5, "batch_size": 4, "seed": 2, "accuracy_floor": 0.5},
    "ipr": {"explainers": ["LIME", "GradCAM"], "critical_layers": ["conv1"], "randomization_seed": 5,
            "bootstrap_resamples": 300, "bootstrap_level": 0.8, "threshold_rule": "strictly_below",
            "ssim": {"window_size": 7, "window_sigma": 1.0, "k1": 0.02, "k2": 0.04, "dynamic_range": 1.0},
            "explainer": {"ig_steps": 8, "baseline": "zero", "lime_segments": 9, "lime_samples": 30,
                          "lime_kernel_width": 0.5, "lime_l1_strength": 0.1, "seed": 4}},
    "threads": 3, "output_dir": "o", "cache_dir": "cc", "use_cache": false
  })");
  EXPECT_EQ(c.architectures, (std::vector<std::string>{"toy-seq-5"}));
  EXPECT_EQ(c.dataset.image_size, 12u);
  EXPECT_EQ(c.train.epochs, 5u);
  EXPECT_EQ(c.ipr.explainers, (std::vector<ExplainerId>{ExplainerId::LIME, ExplainerId::GradCAM}));
  EXPECT_EQ(*c.ipr.critical_layers, (std::vector<std::string>{"conv1"}));
  EXPECT_EQ(c.ipr.threshold_rule, ThresholdRule::StrictlyBelow);
  EXPECT_EQ(c.ipr.ssim.window_size, 7u);
  EXPECT_EQ(c.ipr.explainer.lime_segments, 9u);
  EXPECT_EQ(c.ipr.threads, 3u);
  EXPECT_EQ(c.output_dir, fs::path("o"));
  EXPECT_EQ(*c.cache_dir, fs::path("cc"));
  EXPECT_FALSE(c.use_cache);
}

TEST(Config, UnknownKeysRejectedWithPointer) {
  try {
    parse_config(R"({"ssim_threshold_v2": 0.98})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("ssim_threshold_v2"), std::string::npos);
  }
  try {
    parse_config(R"({"ipr": {"ssim": {"window": 7}}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/ipr/ssim/window"), std::string::npos);
  }
}

TEST(Config, ValidationErrors) {
  EXPECT_THROW(parse_config(R"({"ipr": {"bootstrap_level": 1.5}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"architectures": []})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"architectures": ["resnet50"]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"ipr": {"explainers": []}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"ipr": {"explainers": ["SmoothGrad"]}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"ipr": {"threshold_rule": "below"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"dataset": {"num_images": -1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"dataset": {"image_size": 8}})"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, SyntaxErrorsCarryLineAndColumn) {
  try {
    parse_config("{\n  \"threads\": 1,\n  \"use_cache\": tru\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, EchoOmitsLocationsAndThreads) {
  RunConfig a = parse_config("{}");
  RunConfig b = parse_config(R"({"threads": 8, "output_dir": "elsewhere", "use_cache": false})");
  EXPECT_EQ(config_echo_json(a), config_echo_json(b));
  const auto echo = nlohmann::json::parse(config_echo_json(a));
  EXPECT_EQ(echo["ipr"]["randomization_seed"], 42);
  EXPECT_FALSE(echo.contains("threads"));
}

TEST(Chart, SingleBarHalfHeightAndThresholdLine) {
  const ChartGeometry g;
  const std::string svg = emit_s_I_chart({score(ExplainerId::Gradients, "toy-seq-3", 0.5, 0.4, 0.6)});
  const auto bars = elements(svg, "rect", "bar");
  ASSERT_EQ(bars.size(), 1u);
  EXPECT_DOUBLE_EQ(attr(bars[0], "height"), g.plot_height / 2);
  EXPECT_DOUBLE_EQ(attr(bars[0], "y"), g.top + g.plot_height / 2);
  const auto line = elements(svg, "line", "threshold");
  ASSERT_EQ(line.size(), 1u);
  EXPECT_NE(line[0].find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(line[0].find("red"), std::string::npos);
  // y pixel of the threshold line maps back to 0.01 in data space.
  const double y = attr(line[0], "y1");
  EXPECT_EQ(y, attr(line[0], "y2"));
  EXPECT_NEAR(1.0 - (y - g.top) / g.plot_height, 0.01, 1e-3);
  EXPECT_EQ(elements(svg, "line", "ci").size(), 3u);
}

TEST(Chart, GroupsAndWhiskers) {
  const std::string svg = emit_s_I_chart({score(ExplainerId::Gradients, "a", 0.2, 0.1, 0.3),
                                          score(ExplainerId::Gradients, "b", 0.6, 0.5, 0.7),
                                          score(ExplainerId::LIME, "a", 1.0, 1.0, 1.0),
                                          score(ExplainerId::LIME, "b", 0.0, 0.0, 0.0)});
  const auto bars = elements(svg, "rect", "bar");
  ASSERT_EQ(bars.size(), 4u);
  const ChartGeometry g;
  const auto whiskers = elements(svg, "line", "ci");
  // First whisker spans 0.1 .. 0.3.
  EXPECT_NEAR(attr(whiskers[0], "y1"), g.y_of(0.1), 1e-3);
  EXPECT_NEAR(attr(whiskers[0], "y2"), g.y_of(0.3), 1e-3);
  EXPECT_THROW(emit_s_I_chart({}), ValidationError);
}

TEST(Chart, WellFormedXml) {
  // Balanced tags and escaped text; the CLI test additionally runs a strict parser.
  const std::string svg = emit_s_I_chart({score(ExplainerId::Gradients, "a<&>\"b", 0.3, 0.2, 0.4)});
  EXPECT_NE(svg.find("a&lt;&amp;&gt;&quot;b"), std::string::npos);
  EXPECT_EQ(svg.rfind("</svg>\n"), svg.size() - 7);
}

TEST(Tables, CoefficientFormatting) {
  EXPECT_EQ(format_coefficient(1.0), "1");
  EXPECT_EQ(format_coefficient(0.9), "0.9");
  EXPECT_EQ(format_coefficient(0.98430000001), "0.9843");
  EXPECT_EQ(format_coefficient(-0.048), "-0.048");
  EXPECT_EQ(format_coefficient(-0.00001), "0");
}

TEST(Tables, ConstructedProfilesReproduceReferenceCells) {
  const std::string csv = emit_correlation_tables(ipr::testing::constructed_profile_table());
  const std::string spearman = csv.substr(0, csv.find("# pearson"));
  const std::string pearson = csv.substr(csv.find("# pearson"));
  EXPECT_NE(spearman.find(",1,1 (***)\n"), std::string::npos) << spearman;
  EXPECT_NE(spearman.find("GuidedBP,1,0.9 (*)"), std::string::npos) << spearman;
  EXPECT_NE(pearson.find("GuidedBP,1,0.9843 (**)"), std::string::npos) << pearson;
  EXPECT_NE(pearson.find("0.9668 (**)"), std::string::npos) << pearson;
}

TEST(Tables, SymmetricCells) {
  const std::string csv = emit_correlation_tables(ipr::testing::constructed_profile_table());
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv.substr(0, csv.find("\n\n")));
  std::string line;
  std::getline(in, line);  // section marker
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(rows[i][i + 1], "1");
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(rows[i][j + 1], rows[j][i + 1]);
  }
}

TEST(Tables, FewerThanThreeArchitecturesWarns) {
  SITable t = ipr::testing::constructed_profile_table();
  t.architectures.resize(2);
  const std::string csv = emit_correlation_tables(t);
  EXPECT_EQ(csv.rfind("# warning", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
}

TEST(Records, SchemaAndAuditRecomputation) {
  const std::vector<ArchitectureReport> reports{small_report("toy-seq-3"), small_report("toy-res-4")};
  const std::string csv = records_csv(reports);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "architecture,explainer,image_id,layer_id,ssim_raw,ssim,layer_sensitivity,sensitive_to_layer");
  const auto back = recompute_from_records(csv, BootstrapSpec{200, 0.9, 0}, 42);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(aggregates_json(back), aggregates_json(reports));
  for (std::size_t a = 0; a < 2; ++a) {
    EXPECT_EQ(back[a].layers, reports[a].layers);
    ASSERT_EQ(back[a].per_explainer.size(), reports[a].per_explainer.size());
    for (std::size_t e = 0; e < back[a].per_explainer.size(); ++e) {
      EXPECT_EQ(back[a].per_explainer[e].s_I, reports[a].per_explainer[e].s_I);
      EXPECT_EQ(back[a].per_explainer[e].ci.lo, reports[a].per_explainer[e].ci.lo);
    }
  }
}

TEST(Records, MalformedCsvRejected) {
  EXPECT_THROW(recompute_from_records("a,b\n", {}, 42), FormatError);
  const std::string header(kRecordsHeader);
  EXPECT_THROW(recompute_from_records(header + "\nx,Gradients,i,l,0.5,0.5,0.5\n", {}, 42), FormatError);
  EXPECT_THROW(recompute_from_records(header + "\nx,Bogus,i,l,0.5,0.5,0.5,true\n", {}, 42), FormatError);
  EXPECT_THROW(recompute_from_records(header + "\nx,Gradients,i,l,abc,0.5,0.5,true\n", {}, 42), FormatError);
  EXPECT_THROW(recompute_from_records(header + "\nx,Gradients,i,l,0.5,0.5,0.5,yes\n", {}, 42), FormatError);
}

TEST(Gallery, PgmQuantizationAndRoundTrip) {
  const ArchitectureReport r = small_report("toy-seq-3");
  const fs::path dir = scratch("gallery");
  const auto files = export_saliency_gallery(r, {"img-0001"}, dir);
  // 2 explainers x (original + 4 randomized layers)
  ASSERT_EQ(files.size(), 10u);
  EXPECT_TRUE(fs::exists(dir / "toy-seq-3__img-0001__Gradients__original.pgm"));
  EXPECT_TRUE(fs::exists(dir / "toy-seq-3__img-0001__GuidedBP__randomized-conv2.pgm"));
  const SaliencyMap& original = r.original_maps[1];
  ASSERT_EQ(original.image_id, "img-0001");
  const Tensor back = read_pgm(dir / "toy-seq-3__img-0001__Gradients__original.pgm");
  EXPECT_LE(max_abs_diff(back, original.normalized), 1.0 / 255.0);
  const std::string bytes = read_file(dir / "toy-seq-3__img-0001__Gradients__original.pgm");
  EXPECT_NE(bytes.find(static_cast<char>(255)), std::string::npos);
  EXPECT_THROW(export_saliency_gallery(r, {"img-9999"}, dir), ValidationError);
}

TEST(Gallery, ZeroMapIsAllZeroPgm) {
  const fs::path dir = scratch("zero");
  write_pgm(dir / "z.pgm", Tensor({1, 4, 4}));
  const std::string bytes = read_file(dir / "z.pgm");
  EXPECT_EQ(bytes.substr(0, 2), "P5");
  EXPECT_EQ(bytes.substr(bytes.size() - 16), std::string(16, '\0'));
  EXPECT_EQ(read_pgm(dir / "z.pgm"), Tensor({1, 4, 4}));
}

TEST(Pipeline, UnwritableOutputIsIoError) {
  RunConfig c;
  c.output_dir = "/proc/ipr-cannot-write-here";
  EXPECT_THROW(run_command(c), IoError);
}

TEST(Pipeline, CachePathTracksTrainingInputs) {
  RunConfig a;
  RunConfig b = a;
  b.train.seed = 2;
  RunConfig c = a;
  c.ipr.randomization_seed = 5;
  EXPECT_NE(model_cache_path(a, "toy-seq-3"), model_cache_path(b, "toy-seq-3"));
  EXPECT_EQ(model_cache_path(a, "toy-seq-3"), model_cache_path(c, "toy-seq-3"));
  EXPECT_NE(model_cache_path(a, "toy-seq-3"), model_cache_path(a, "toy-res-4"));
}

TEST(Pipeline, EndToEndSmallRunIsReproducibleAndAuditable) {
  RunConfig c;
  c.architectures = {"toy-seq-3", "toy-res-4", "toy-seq-5"};
  c.dataset.num_images = 4;
  c.ipr.explainers = {ExplainerId::Gradients, ExplainerId::InputXGradient, ExplainerId::GuidedBP};
  c.ipr.bootstrap_resamples = 200;
  c.output_dir = scratch("e2e-a");
  c.cache_dir = scratch("e2e-cache");
  const RunOutcome first = run_command(c);
  for (const char* f : {"report.json", "records.csv", "correlations.csv", "s_I_chart.svg", "timing.json"}) {
    EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
  }
  RunConfig again = c;
  again.output_dir = scratch("e2e-b");
  run_command(again);
  for (const char* f : {"report.json", "records.csv", "correlations.csv", "s_I_chart.svg"}) {
    EXPECT_EQ(read_file(c.output_dir / f), read_file(again.output_dir / f)) << f;
  }
  EXPECT_NE(read_file(c.output_dir / "correlations.csv").find("# spearman"), std::string::npos);

  // Every aggregate in report.json is recomputable from records.csv.
  const auto report = nlohmann::json::parse(read_file(c.output_dir / "report.json"));
  ReportOptions options;
  options.bootstrap = {200, 0.9, 0};
  options.output_dir = scratch("e2e-audit");
  report_command(c.output_dir / "records.csv", options);
  const auto audit = nlohmann::json::parse(read_file(*options.output_dir / "aggregates.json"));
  ASSERT_EQ(audit.size(), report["architectures"].size());
  for (std::size_t a = 0; a < audit.size(); ++a) {
    EXPECT_EQ(audit[a]["dataset_sensitivity"], report["architectures"][a]["dataset_sensitivity"]);
    EXPECT_EQ(audit[a]["image_sensitivity"], report["architectures"][a]["image_sensitivity"]);
  }
}
