#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ipr/nn/tensor.hpp"

namespace ipr {

/// Writes to a sibling temporary file and renames it over `path`.
/// Throws IoError on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Binary 8-bit PGM (P5). `image` is [H,W] or [1,H,W] with values in [0,1];
/// each pixel is stored as round(v * 255).
std::string encode_pgm(const Tensor& image);
void write_pgm(const std::filesystem::path& path, const Tensor& image);

/// Parses a P5 PGM into a [1,H,W] tensor scaled to [0,1].
Tensor decode_pgm(std::string_view bytes);
Tensor read_pgm(const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace ipr
