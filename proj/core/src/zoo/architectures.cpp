#include "ipr/zoo/architectures.hpp"

#include "ipr/error.hpp"

namespace ipr {

const std::vector<std::string>& known_architectures() {
  static const std::vector<std::string> ids{"toy-seq-3", "toy-seq-5", "toy-res-4"};
  return ids;
}

Model build_architecture(const std::string& architecture_id, std::uint64_t seed, const ArchitectureOptions& options) {
  const Shape input{1, options.image_size, options.image_size};
  ModelBuilder b(architecture_id, input, options.num_classes);
  if (architecture_id == "toy-seq-3") {
    b.conv("conv1", 4, 3, 1, 1).relu("relu1").max_pool("pool1", 2, 2);
    b.conv("conv2", 8, 3, 1, 1).relu("relu2").max_pool("pool2", 2, 2);
    b.conv("conv3", 8, 3, 1, 1).relu("relu3");
    b.flatten("flatten").dense("fc", options.num_classes);
  } else if (architecture_id == "toy-seq-5") {
    b.conv("conv1", 4, 3, 1, 1).relu("relu1");
    b.conv("conv2", 4, 3, 1, 1).relu("relu2").max_pool("pool1", 2, 2);
    b.conv("conv3", 8, 3, 1, 1).relu("relu3");
    b.conv("conv4", 8, 3, 1, 1).relu("relu4").max_pool("pool2", 2, 2);
    b.conv("conv5", 8, 3, 1, 1).relu("relu5");
    b.flatten("flatten").dense("fc", options.num_classes);
  } else if (architecture_id == "toy-res-4") {
    b.conv("conv1", 4, 3, 1, 1).relu("relu1").max_pool("pool1", 2, 2);
    b.conv("conv2", 4, 3, 1, 1).relu("relu2");
    b.conv("conv3", 4, 3, 1, 1).residual_add("add1", "pool1").relu("relu3").max_pool("pool2", 2, 2);
    b.conv("conv4", 8, 3, 1, 1).relu("relu4");
    b.flatten("flatten").dense("fc", options.num_classes);
  } else {
    throw ValidationError("unknown architecture '" + architecture_id + "'");
  }
  return b.build(seed);
}

std::vector<std::string> list_parameter_layers(const Model& model) {
  std::vector<std::string> ids;
  for (const LayerDescriptor& layer : model.layers) {
    if (layer.has_parameters()) ids.push_back(layer.id);
  }
  return ids;
}

Model randomize_layer(const Model& model, const std::string& layer_id, std::uint64_t seed) {
  const auto idx = model.layer_index(layer_id);
  if (!idx) throw ValidationError("randomize_layer: unknown layer '" + layer_id + "'");
  if (!model.layers[*idx].has_parameters()) {
    throw ValidationError("randomize_layer: layer '" + layer_id + "' has no parameters");
  }
  Model randomized = model;
  initialize_layer(randomized, layer_id, seed);
  return randomized;
}

}  // namespace ipr
