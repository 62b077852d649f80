#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "focus/raster.hpp"

namespace focus {

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed palette for label maps: class 0, class 1, non-water (any other
/// value, including nodata).
inline constexpr Rgb kClass0Color = {46, 134, 193};
inline constexpr Rgb kClass1Color = {203, 67, 53};
inline constexpr Rgb kNonWaterColor = {236, 236, 236};

void write_label_png(const RasterGrid& labels, const std::filesystem::path& path);

/// Grayscale render of values in [0, 1]; nodata renders as the non-water
/// color.
void write_probability_png(const RasterGrid& probability, const std::filesystem::path& path);

}  // namespace focus
