#include "ipr/zoo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "ipr/error.hpp"
#include "ipr/io.hpp"
#include "ipr/rng.hpp"

namespace ipr {

void validate(const LabeledDataset& dataset) {
  if (dataset.images.empty()) throw ValidationError("dataset is empty");
  if (dataset.images.size() != dataset.labels.size()) {
    throw ValidationError("dataset has " + std::to_string(dataset.images.size()) + " images but " +
                          std::to_string(dataset.labels.size()) + " labels");
  }
  std::set<std::string> ids;
  for (const LabeledImage& img : dataset.images) {
    if (!ids.insert(img.image_id).second) throw ValidationError("duplicate image id '" + img.image_id + "'");
    for (double v : img.tensor.values()) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("image '" + img.image_id + "' has pixels outside [0, 1]");
    }
  }
}

namespace {

constexpr double kNoiseSigma = 0.05;

Tensor render(std::size_t label, std::size_t size, Rng& rng) {
  Tensor img({1, size, size});
  const double amplitude = rng.uniform(0.7, 1.0);
  const double s = static_cast<double>(size);
  switch (label) {
    case 0:
    case 1: {
      // Bars of period 4 and thickness 2 with a one-pixel phase jitter.
      const std::size_t phase = rng.below(2);
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const std::size_t coord = label == 0 ? y : x;
          if ((coord + phase) % 4 < 2) img.at(0, y, x) = amplitude;
        }
      }
      break;
    }
    case 2: {
      const double cy = s / 2.0 + rng.uniform(-s / 8.0, s / 8.0);
      const double cx = s / 2.0 + rng.uniform(-s / 8.0, s / 8.0);
      const double r = rng.uniform(s / 5.0, s / 3.0);
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const double dy = static_cast<double>(y) + 0.5 - cy;
          const double dx = static_cast<double>(x) + 0.5 - cx;
          if (dy * dy + dx * dx <= r * r) img.at(0, y, x) = amplitude;
        }
      }
      break;
    }
    case 3: {
      const auto half = static_cast<std::ptrdiff_t>(size / 4 + rng.below(size / 8 + 1));
      const auto jitter = static_cast<std::ptrdiff_t>(size / 8);
      const auto cy = static_cast<std::ptrdiff_t>(size / 2) + static_cast<std::ptrdiff_t>(rng.below(2 * jitter + 1)) - jitter;
      const auto cx = static_cast<std::ptrdiff_t>(size / 2) + static_cast<std::ptrdiff_t>(rng.below(2 * jitter + 1)) - jitter;
      for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(size); ++y) {
        for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(size); ++x) {
          const std::ptrdiff_t dy = std::abs(y - cy), dx = std::abs(x - cx);
          const std::ptrdiff_t ring = std::max(dy, dx);
          if (ring <= half && ring >= half - 1) img.at(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = amplitude;
        }
      }
      break;
    }
    default:
      throw ValidationError("unsupported class label " + std::to_string(label));
  }
  for (double& v : img.values()) v = std::clamp(v + kNoiseSigma * rng.normal(), 0.0, 1.0);
  return img;
}

}  // namespace

LabeledDataset generate_synthetic_dataset(std::size_t num_images, std::size_t image_size, std::size_t num_classes,
                                          std::uint64_t seed) {
  if (num_images < 1) throw ValidationError("synthetic dataset: num_images must be >= 1");
  if (image_size < 8) throw ValidationError("synthetic dataset: image_size must be >= 8");
  if (num_classes < 2 || num_classes > 4) throw ValidationError("synthetic dataset: num_classes must be 2, 3 or 4");

  LabeledDataset ds;
  ds.generator_seed = seed;
  ds.images.reserve(num_images);
  ds.labels.reserve(num_images);
  for (std::size_t i = 0; i < num_images; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "img-%04zu", i);
    const std::size_t label = i % num_classes;
    Rng rng(derive_seed(seed, id));
    ds.images.push_back({id, render(label, image_size, rng)});
    ds.labels.push_back(label);
  }
  return ds;
}

LabeledDataset select_images(const LabeledDataset& dataset, const std::vector<std::string>& image_ids) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dataset.images.size(); ++i) index.emplace(dataset.images[i].image_id, i);
  LabeledDataset out;
  out.generator_seed = dataset.generator_seed;
  for (const std::string& id : image_ids) {
    const auto it = index.find(id);
    if (it == index.end()) throw ValidationError("unknown image id '" + id + "'");
    out.images.push_back(dataset.images[it->second]);
    out.labels.push_back(dataset.labels[it->second]);
  }
  return out;
}

void export_dataset_pgm(const LabeledDataset& dataset, const std::filesystem::path& directory) {
  validate(dataset);
  std::filesystem::create_directories(directory);
  std::string manifest = "image_id,label\n";
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    write_pgm(directory / (dataset.images[i].image_id + ".pgm"), dataset.images[i].tensor);
    manifest += dataset.images[i].image_id + "," + std::to_string(dataset.labels[i]) + "\n";
  }
  write_file_atomic(directory / "labels.csv", manifest);
}

}  // namespace ipr
