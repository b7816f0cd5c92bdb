#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipr/error.hpp"
#include "ipr/report/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int fail(int code, const char* kind, const std::string& message) {
  nlohmann::ordered_json err{{"error", kind}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return code;
}

std::vector<std::string> split_ids(const std::vector<std::string>& raw) {
  std::vector<std::string> ids;
  for (const std::string& item : raw) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const std::size_t comma = item.find(',', start);
      const std::string id = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!id.empty()) ids.push_back(id);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Independent parameter randomization test for saliency maps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool no_cache = false;
  int threads = -1;
  auto* run = app.add_subcommand("run", "train/load models, run the test, write the report files");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_flag("--no-cache", no_cache, "retrain instead of loading cached models");
  run->add_option("--threads", threads, "worker threads (0 = all cores)");

  std::string records_path;
  std::uint64_t seed = 42;
  std::size_t resamples = 1000;
  double level = 0.90;
  auto* report = app.add_subcommand("report", "recompute aggregates, chart and tables from records.csv");
  report->add_option("--from", records_path, "records.csv of a previous run")->required();
  report->add_option("--out", out_dir, "output directory (default: next to records.csv)");
  report->add_option("--randomization-seed", seed, "seed the run used (bootstrap seeds derive from it)");
  report->add_option("--bootstrap-resamples", resamples);
  report->add_option("--bootstrap-level", level);

  std::vector<std::string> image_args;
  auto* gallery = app.add_subcommand("gallery", "write PGM saliency maps for selected images");
  gallery->add_option("--config", config_path, "JSON run configuration")->required();
  gallery->add_option("--images", image_args, "image ids (comma or space separated)")->required();
  gallery->add_option("--out", out_dir, "output directory (overrides the config)");
  gallery->add_flag("--no-cache", no_cache, "retrain instead of loading cached models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    auto load = [&] {
      ipr::RunConfig config = ipr::load_config(config_path);
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (no_cache) config.use_cache = false;
      if (threads >= 0) config.ipr.threads = static_cast<std::size_t>(threads);
      ipr::validate(config);
      return config;
    };
    if (*run) {
      const auto outcome = ipr::run_command(load());
      for (const auto& f : outcome.files) std::cout << f.string() << "\n";
      for (const auto& r : outcome.reports) {
        for (const auto& d : r.per_explainer) {
          std::cout << r.architecture_id << " " << ipr::to_string(d.explainer) << " S^I=" << d.s_I
                    << (d.sensitive_to_dataset ? " sensitive" : " NOT sensitive") << "\n";
        }
      }
    } else if (*report) {
      ipr::ReportOptions options;
      options.randomization_seed = seed;
      options.bootstrap.resamples = resamples;
      options.bootstrap.level = level;
      if (!out_dir.empty()) options.output_dir = out_dir;
      for (const auto& f : ipr::report_command(records_path, options)) std::cout << f.string() << "\n";
    } else if (*gallery) {
      const auto files = ipr::gallery_command(load(), split_ids(image_args));
      for (const auto& f : files) std::cout << f.string() << "\n";
    }
  } catch (const ipr::ConfigError& e) {
    return fail(kExitValidation, "config", e.what());
  } catch (const ipr::ValidationError& e) {
    return fail(kExitValidation, "validation", e.what());
  } catch (const ipr::IoError& e) {
    return fail(kExitRuntime, "io", e.what());
  } catch (const ipr::FormatError& e) {
    return fail(kExitRuntime, "format", e.what());
  } catch (const ipr::TrainingError& e) {
    return fail(kExitRuntime, "training", e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "runtime", e.what());
  }
  return 0;
}
