#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipr/harness/harness.hpp"
#include "ipr/nn/train.hpp"

namespace ipr {

struct DatasetSpec {
  std::size_t num_images = 20;  // images in the evaluation set
  std::size_t image_size = 16;
  std::size_t num_classes = 2;
  std::uint64_t seed = 7;
  std::size_t train_images = 200;  // separate training set, derived seed
};

struct RunConfig {
  std::vector<std::string> architectures{"toy-seq-3", "toy-res-4"};
  DatasetSpec dataset;
  TrainConfig train;
  IprConfig ipr;
  std::filesystem::path output_dir = "ipr-out";
  /// Trained models are cached here; defaults to <output_dir>/model-cache.
  std::optional<std::filesystem::path> cache_dir;
  bool use_cache = true;
};

/// Parses a JSON run configuration. Every key is optional and falls back to
/// the defaults above; unknown keys are rejected. Errors are ConfigError with
/// line/column (syntax) or the JSON pointer of the offending key (validation).
///
/// {
///   "architectures": ["toy-seq-3", "toy-res-4"],
///   "dataset": {"num_images": 20, "image_size": 16, "num_classes": 2, "seed": 7, "train_images": 200},
///   "train": {"learning_rate": 0.05, "epochs": 40, "batch_size": 10, "seed": 1, "accuracy_floor": 0.95},
///   "ipr": {
///     "explainers": ["Gradients", ...], "critical_layers": null, "randomization_seed": 42,
///     "bootstrap_resamples": 1000, "bootstrap_level": 0.9, "threshold_rule": "at_most",
///     "ssim": {"window_size": 11, "window_sigma": 1.5, "k1": 0.01, "k2": 0.03, "dynamic_range": 1.0},
///     "explainer": {"ig_steps": 64, "baseline": "zero", "lime_segments": 16, "lime_samples": 200,
///                   "lime_kernel_width": 0.25, "lime_l1_strength": 0.01, "seed": 0}
///   },
///   "threads": 1,
///   "output_dir": "ipr-out",
///   "cache_dir": null,
///   "use_cache": true
/// }
RunConfig parse_config(std::string_view json_text);

RunConfig load_config(const std::filesystem::path& path);

/// Full semantic validation (architectures known, sub-configs valid, ...).
void validate(const RunConfig& config);

/// Canonical JSON of every result-affecting setting. Excludes the thread
/// count, output and cache locations, which do not change results.
std::string config_echo_json(const RunConfig& config);

}  // namespace ipr
