#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipr/explain/explainers.hpp"
#include "ipr/harness/sensitivity.hpp"
#include "ipr/metrics/correlation.hpp"
#include "ipr/metrics/ssim.hpp"
#include "ipr/nn/model.hpp"
#include "ipr/zoo/dataset.hpp"

namespace ipr {

struct IprConfig {
  std::vector<ExplainerId> explainers = default_explainers();
  /// Layers whose randomization is tested; unset means every parameter layer.
  std::optional<std::vector<std::string>> critical_layers;
  std::uint64_t randomization_seed = 42;
  std::size_t bootstrap_resamples = 1000;
  double bootstrap_level = 0.90;
  ThresholdRule threshold_rule = ThresholdRule::AtMost;
  SsimParams ssim;
  ExplainerConfig explainer;
  /// If set, run_ipr rejects models whose accuracy on the dataset is lower.
  std::optional<double> required_accuracy;
  /// Worker threads for the evaluation grid; 0 uses the hardware concurrency.
  /// Results do not depend on this value.
  std::size_t threads = 1;
};

void validate(const IprConfig& config);

/// Produces the randomized variant of one layer. The default re-draws the
/// layer from its initializer; tests substitute e.g. the identity.
using LayerRandomizer = std::function<Model(const Model&, const std::string& layer_id, std::uint64_t seed)>;

/// The default LayerRandomizer (wraps randomize_layer).
LayerRandomizer randomize_layer_default();

/// Seed used to randomize `layer_id`.
std::uint64_t layer_randomization_seed(std::uint64_t randomization_seed, const std::string& layer_id);

/// Outcome of the randomization test for one architecture.
struct ArchitectureReport {
  std::string architecture_id;
  std::vector<std::string> layers;
  std::vector<ExplainerId> explainers;
  std::vector<std::string> image_ids;
  /// Class explained for each image: the original model's argmax.
  std::vector<std::size_t> pinned_classes;
  /// Ordered by explainer (config order), then image, then layer.
  std::vector<SensitivityRecord> records;
  /// Ordered by explainer, then image.
  std::vector<ImageSensitivity> per_image;
  /// One entry per explainer, in config order.
  std::vector<DatasetSensitivity> per_explainer;
  /// Original-model maps, ordered by explainer then image.
  std::vector<SaliencyMap> original_maps;
  /// Randomized-model maps, ordered by explainer, image, layer.
  std::vector<SaliencyMap> randomized_maps;
};

/// Runs the independent single-layer randomization test.
///
/// For every in-scope layer a randomized model is built once. Each image is
/// explained for the class the original model predicts; the original map per
/// (image, explainer) is computed once and compared by SSIM (on normalized
/// maps) with the map of every randomized model. Any explainer failure aborts
/// the run with an IprError naming (explainer, image, layer).
ArchitectureReport run_ipr(const Model& model, const LabeledDataset& dataset, const IprConfig& config,
                           const LayerRandomizer& randomizer = randomize_layer_default());

/// S^I profiles: one value per (explainer, architecture).
struct SITable {
  std::vector<ExplainerId> explainers;
  std::vector<std::string> architectures;
  std::map<std::pair<ExplainerId, std::string>, double> values;

  double at(ExplainerId e, const std::string& arch) const;
};

SITable si_table(const std::vector<ArchitectureReport>& reports);

struct CorrelationMatrix {
  CorrelationMethod method = CorrelationMethod::Spearman;
  std::vector<ExplainerId> explainers;
  /// cells[i][j]; nullopt where a profile is constant and the coefficient is undefined.
  std::vector<std::vector<std::optional<CorrelationResult>>> cells;
};

struct CorrelationTables {
  CorrelationMatrix spearman;
  CorrelationMatrix pearson;
};

/// Pairwise Spearman and Pearson correlation of the explainers' S^I profiles
/// across architectures. Needs >= 3 architectures and every cell filled.
/// Diagonal cells are exactly 1 with p = 0.
CorrelationTables cross_architecture_correlations(const SITable& table);

}  // namespace ipr
