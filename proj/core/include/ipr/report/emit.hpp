#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ipr/harness/harness.hpp"

namespace ipr {

/// Column order of records.csv.
inline constexpr std::string_view kRecordsHeader =
    "architecture,explainer,image_id,layer_id,ssim_raw,ssim,layer_sensitivity,sensitive_to_layer";

/// One row per SensitivityRecord; reals are written in shortest round-trip form.
std::string records_csv(const std::vector<ArchitectureReport>& reports);

/// Rebuilds per-architecture reports from records.csv: records, per-image
/// and per-explainer aggregates (maps and pinned classes stay empty). Row
/// order within each (architecture, explainer, image) group is preserved.
std::vector<ArchitectureReport> recompute_from_records(std::string_view csv, const BootstrapSpec& bootstrap_defaults,
                                                       std::uint64_t randomization_seed);

/// JSON array of per-architecture aggregates (dataset- and image-level).
std::string aggregates_json(const std::vector<ArchitectureReport>& reports);

/// Full report.json: config echo, thresholds, aggregates and correlation tables.
std::string report_json(const std::string& config_echo, const std::vector<ArchitectureReport>& reports,
                        const std::vector<double>& train_accuracy);

/// Vertical geometry of the S^I chart: value v in [0,1] maps to y_of(v).
struct ChartGeometry {
  double top = 40.0;
  double plot_height = 300.0;
  double left = 70.0;
  double bar_width = 18.0;
  double group_gap = 24.0;

  double y_of(double value) const { return top + plot_height * (1.0 - value); }
};

/// Grouped bar chart (one group per explainer, one bar per architecture) with
/// bootstrap whiskers and a dashed threshold line at the sensitivity threshold.
std::string emit_s_I_chart(const std::vector<DatasetSensitivity>& scores, const ChartGeometry& geometry = {});

/// Coefficient cell text: rounded to 4 decimals, trailing zeros dropped.
std::string format_coefficient(double value);

/// Spearman and Pearson matrices as CSV with "coef (stars)" cells. With fewer
/// than three architectures a single warning row is written instead.
std::string emit_correlation_tables(const SITable& table);

/// Writes one 8-bit PGM per saliency map (original and every randomized
/// layer) of the requested images, named
/// <architecture>__<image_id>__<explainer>__<model-tag>.pgm. Returns the paths.
std::vector<std::filesystem::path> export_saliency_gallery(const ArchitectureReport& report,
                                                           const std::vector<std::string>& image_ids,
                                                           const std::filesystem::path& directory);

}  // namespace ipr
