#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ipr/nn/tensor.hpp"

namespace ipr {

struct LabeledImage {
  std::string image_id;
  Tensor tensor;  // [1, size, size], values in [0, 1]
};

struct LabeledDataset {
  std::vector<LabeledImage> images;
  std::vector<std::size_t> labels;
  std::uint64_t generator_seed = 0;
};

/// Equal lengths, unique ids, pixel values in [0, 1].
void validate(const LabeledDataset& dataset);

/// Procedural grayscale images: class 0 horizontal bars, 1 vertical bars,
/// 2 filled disc, 3 hollow square, each with positional jitter and additive
/// Gaussian noise clamped to [0, 1]. Labels cycle 0..num_classes-1 so class
/// counts differ by at most one.
LabeledDataset generate_synthetic_dataset(std::size_t num_images, std::size_t image_size, std::size_t num_classes,
                                          std::uint64_t seed);

/// Images whose ids appear in `image_ids`, in the order given. Unknown ids throw.
LabeledDataset select_images(const LabeledDataset& dataset, const std::vector<std::string>& image_ids);

/// Writes `<image_id>.pgm` per image plus `labels.csv` (image_id,label).
void export_dataset_pgm(const LabeledDataset& dataset, const std::filesystem::path& directory);

}  // namespace ipr
