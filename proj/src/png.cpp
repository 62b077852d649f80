#include "focus/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "focus/error.hpp"

namespace focus {
namespace {

void write_rgb(const std::vector<std::uint8_t>& rgb, int width, int height, const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(r) * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("cannot write " + path.string());
}

}  // namespace

void write_label_png(const RasterGrid& labels, const std::filesystem::path& path) {
  std::vector<std::uint8_t> rgb;
  rgb.reserve(labels.size() * 3);
  for (double v : labels.values()) {
    const Rgb& c = labels.is_nodata(v) ? kNonWaterColor : v == 0.0 ? kClass0Color : v == 1.0 ? kClass1Color
                                                                                                : kNonWaterColor;
    rgb.insert(rgb.end(), c.begin(), c.end());
  }
  write_rgb(rgb, labels.width(), labels.height(), path);
}

void write_probability_png(const RasterGrid& prob, const std::filesystem::path& path) {
  std::vector<std::uint8_t> rgb;
  rgb.reserve(prob.size() * 3);
  for (double v : prob.values()) {
    if (prob.is_nodata(v)) {
      rgb.insert(rgb.end(), kNonWaterColor.begin(), kNonWaterColor.end());
      continue;
    }
    const auto g = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    rgb.insert(rgb.end(), {g, g, g});
  }
  write_rgb(rgb, prob.width(), prob.height(), path);
}

}  // namespace focus
