#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ipr/harness/harness.hpp"
#include "ipr/report/config.hpp"

namespace ipr {

/// Synthetic evaluation set described by the config.
LabeledDataset evaluation_dataset(const RunConfig& config);
/// Separate training set (seed derived from the evaluation seed).
LabeledDataset training_dataset(const RunConfig& config);

/// Cache file for the trained model of `architecture_id`; the name carries a
/// hash of everything that influences training.
std::filesystem::path model_cache_path(const RunConfig& config, const std::string& architecture_id);

struct TrainedModel {
  Model model;
  double accuracy = 0.0;  // on the evaluation set
  bool from_cache = false;
  double seconds = 0.0;
};

/// Trains the architecture (or loads it from the cache when enabled).
TrainedModel obtain_model(const RunConfig& config, const std::string& architecture_id);

struct RunOutcome {
  std::vector<ArchitectureReport> reports;
  std::vector<double> train_accuracy;
  std::vector<std::filesystem::path> files;
};

/// Trains/loads every architecture, runs the randomization test and writes
/// report.json, records.csv, correlations.csv, s_I_chart.svg (plus
/// timing.json) into config.output_dir.
RunOutcome run_command(const RunConfig& config);

struct ReportOptions {
  BootstrapSpec bootstrap;
  std::uint64_t randomization_seed = 42;
  /// Defaults to the directory holding records.csv.
  std::optional<std::filesystem::path> output_dir;
};

/// Recomputes aggregates from records.csv and writes aggregates.json,
/// correlations.csv and s_I_chart.svg.
std::vector<std::filesystem::path> report_command(const std::filesystem::path& records_csv_path,
                                                  const ReportOptions& options = {});

/// Runs the test on the requested images only and writes one PGM per
/// saliency map into <output_dir>/gallery.
std::vector<std::filesystem::path> gallery_command(const RunConfig& config, const std::vector<std::string>& image_ids);

}  // namespace ipr
