#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "litemono/tensor.hpp"

namespace litemono {

/// RGB image scaled to [0, 1] as 1 x 3 x H x W. Gray is expanded, alpha
/// dropped, 16-bit samples kept at full precision.
Tensord read_png(const std::filesystem::path& path);

/// Writes 1 x C x H x W with C = 1 or 3, values clamped to [0, 1], at 8 or 16
/// bits per sample.
void write_png(const std::filesystem::path& path, const Tensord& image, int bit_depth = 8);

/// Depth file: "LMD1", u32 width, u32 height, then width * height
/// little-endian float32 values in row-major order.
void write_depth_f32(const std::filesystem::path& path, const Tensord& depth);
/// Returns 1 x 1 x H x W.
Tensord read_depth_f32(const std::filesystem::path& path);

const std::array<std::array<std::uint8_t, 3>, 256>& turbo_table();

/// Maps 1 x 1 x H x W values through the turbo table; lo maps to the first
/// entry, hi to the last.
Tensord colorize(const Tensord& map, double lo, double hi);
/// Range from the minimum to the 95th percentile.
Tensord colorize(const Tensord& map);

/// Concatenates 1 x 3 x H x W images left to right; single-channel inputs
/// are repeated to RGB.
Tensord side_by_side(const Tensord& left, const Tensord& right);

}  // namespace litemono
