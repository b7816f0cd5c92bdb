#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipr/nn/model.hpp"

namespace ipr {

struct ArchitectureOptions {
  std::size_t image_size = 16;
  std::size_t num_classes = 2;
};

/// {"toy-seq-3", "toy-seq-5", "toy-res-4"}.
const std::vector<std::string>& known_architectures();

/// Untrained model for a named toy architecture, initialized from `seed`.
///
///   toy-seq-3  three conv/relu blocks (two pooled) and a dense head
///   toy-seq-5  five conv/relu blocks (two pooled) and a dense head
///   toy-res-4  four conv blocks; blocks 2-3 form a residual unit whose skip
///              path carries the block-1 output around them
Model build_architecture(const std::string& architecture_id, std::uint64_t seed,
                         const ArchitectureOptions& options = {});

/// Conv and Dense layer ids in network order.
std::vector<std::string> list_parameter_layers(const Model& model);

/// Copy of `model` with one parameter layer re-drawn from its initializer.
/// All other layers keep their parameters bit-for-bit.
Model randomize_layer(const Model& model, const std::string& layer_id, std::uint64_t seed);

}  // namespace ipr
