#pragma once

#include <filesystem>
#include <iosfwd>

#include "focus/raster.hpp"

namespace focus {

/// FPS1 patch files: magic "FPS1", u32 LE header length, UTF-8 JSON header,
/// then each channel as size_p^2 little-endian float32 values, row-major,
/// in header order.
inline constexpr char kPatchMagic[4] = {'F', 'P', 'S', '1'};

void write_patch(const PatchStack& patch, std::ostream& out);
void write_patch(const PatchStack& patch, const std::filesystem::path& path);
PatchStack read_patch(std::istream& in);
PatchStack read_patch(const std::filesystem::path& path);

/// Round-trips every value through float32, i.e. the value a reader sees.
PatchStack quantize_to_disk_precision(PatchStack patch);

}  // namespace focus
