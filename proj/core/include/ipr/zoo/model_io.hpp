#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ipr/nn/model.hpp"

namespace ipr {

/// Binary model container, all integers and floats little-endian:
///
///   magic        8 bytes  "IPRMODEL"
///   version      u32      kModelFormatVersion
///   architecture str      (u32 length + bytes)
///   input_shape  u32 rank, rank x u64
///   num_classes  u64
///   train_seed   u64
///   layer_count  u32
///   per layer:   str id, u8 kind, u8 init, u64 stride, u64 padding, u64 window,
///                str skip_from, u32 param_count,
///                per param: u32 rank, rank x u64 dims, numel x f64
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::string encode_model(const Model& model);

/// Throws FormatError (with byte offset) on malformed input and VersionError
/// on a version mismatch. Never returns a partially decoded model.
Model decode_model(std::string_view bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace ipr
