#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace focus {

/// Planar map coordinate in meters.
struct Coord {
  double easting = 0.0;
  double northing = 0.0;
  bool operator==(const Coord&) const = default;
};

struct GridIndex {
  int row = 0;
  int col = 0;
  bool operator==(const GridIndex&) const = default;
};

/// Default nodata sentinel. It is the lowest finite float32 so it survives
/// the on-disk encoding unchanged.
inline constexpr double kDefaultNodata = static_cast<double>(std::numeric_limits<float>::lowest());

/// Single-channel grid, row-major, row 0 at the northern edge. Column x
/// increases east and row y increases south; `origin` is the top-left corner.
class RasterGrid {
 public:
  RasterGrid() = default;
  RasterGrid(int width, int height, double cell_size, Coord origin, double fill = 0.0,
             double nodata = kDefaultNodata);

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  Coord origin() const { return origin_; }
  double nodata() const { return nodata_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& at(int row, int col) { return values_[index(row, col)]; }
  double at(int row, int col) const { return values_[index(row, col)]; }
  double& at(GridIndex ix) { return at(ix.row, ix.col); }
  double at(GridIndex ix) const { return at(ix.row, ix.col); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row(int r) { return std::span<double>(values_).subspan(index(r, 0), width_); }
  std::span<const double> row(int r) const {
    return std::span<const double>(values_).subspan(index(r, 0), width_);
  }

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }
  bool contains(int row, int col) const { return row >= 0 && col >= 0 && row < height_ && col < width_; }
  bool contains(GridIndex ix) const { return contains(ix.row, ix.col); }

  /// Bit-exact comparison against the nodata sentinel.
  bool is_nodata(double v) const { return std::bit_cast<std::uint64_t>(v) == std::bit_cast<std::uint64_t>(nodata_); }

  Coord cell_center(int row, int col) const;
  Coord cell_center(GridIndex ix) const { return cell_center(ix.row, ix.col); }

  /// Cell whose half-open footprint [x, x+cell) x (y-cell, y] holds the point.
  std::optional<GridIndex> locate(Coord p) const;

  bool same_geometry(const RasterGrid& other) const;
  bool operator==(const RasterGrid& other) const;

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 1.0;
  Coord origin_{};
  double nodata_ = kDefaultNodata;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Land cover

/// NLCD-style land-cover codes.
namespace landcover {

inline constexpr int kOpenWater = 11;
inline constexpr int kDevelopedOpen = 21;
inline constexpr int kDevelopedLow = 22;
inline constexpr int kDevelopedMedium = 23;
inline constexpr int kDevelopedHigh = 24;
inline constexpr int kBarren = 31;
inline constexpr int kDeciduousForest = 41;
inline constexpr int kEvergreenForest = 42;
inline constexpr int kMixedForest = 43;
inline constexpr int kShrub = 52;
inline constexpr int kGrassland = 71;
inline constexpr int kPasture = 81;
inline constexpr int kCultivatedCrops = 82;
inline constexpr int kWoodyWetlands = 90;
inline constexpr int kEmergentWetlands = 95;

inline constexpr int kAllCodes[] = {kOpenWater,      kDevelopedOpen,   kDevelopedLow,    kDevelopedMedium,
                                    kDevelopedHigh,  kBarren,          kDeciduousForest, kEvergreenForest,
                                    kMixedForest,    kShrub,           kGrassland,       kPasture,
                                    kCultivatedCrops, kWoodyWetlands,  kEmergentWetlands};

/// Coarse groups used for one-hot model input and the HRU lookup.
enum class Group { Water, DevelopedLow, DevelopedHigh, Forest, Barren, Cropland, Other };
inline constexpr int kGroupCount = 7;

bool is_valid(int code);
bool is_water(int code);
bool is_developed(int code);
/// Every valid code is exactly one of water, developed, undeveloped.
bool is_undeveloped(int code);
Group group_of(int code);
std::string_view group_name(Group g);

}  // namespace landcover

// ---------------------------------------------------------------------------
// Patches

enum class ChannelRole { LandCover, FlowDir, Distance, Dem, Soil, Slope, Label, Noise, Other };

std::string_view role_name(ChannelRole role);
ChannelRole parse_role(std::string_view name);

struct Channel {
  std::string name;
  ChannelRole role = ChannelRole::Other;
  RasterGrid grid;
  bool operator==(const Channel&) const = default;
};

/// Multi-channel square raster centered on a coordinate.
struct PatchStack {
  int size = 0;
  Coord center{};
  std::vector<Channel> channels;

  /// Unique names and congruent geometry across channels.
  void validate_structure() const;
  /// validate_structure() plus the channel-role rules of a model input patch.
  void validate() const;

  const Channel* find(std::string_view name) const;
  const Channel* find_role(ChannelRole role) const;
  const RasterGrid& require_role(ChannelRole role) const;
  std::vector<const Channel*> all_of_role(ChannelRole role) const;
  void add(std::string name, ChannelRole role, RasterGrid grid);
  void set(std::string name, ChannelRole role, RasterGrid grid);

  bool operator==(const PatchStack&) const = default;
};

// ---------------------------------------------------------------------------
// Operations

struct RasterizeResult {
  RasterGrid grid;
  std::size_t dropped = 0;
};

/// Marks every cell holding at least one point with 1; points outside the
/// template extent are counted in `dropped`.
RasterizeResult rasterize_points(std::span<const Coord> points, const RasterGrid& template_grid);

struct DistanceResult {
  RasterGrid grid;
  bool empty_source = false;
};

/// Exact Euclidean distance (meters, center to center) to the nearest cell
/// with value 1. All-zero sources yield an all-nodata grid and
/// `empty_source = true`.
DistanceResult distance_transform(const RasterGrid& source);

/// Squared pixel distances to the nearest nonzero cell, +inf when none.
std::vector<double> squared_edt(std::span<const std::uint8_t> mask, int width, int height);

/// Cuts the size x size window whose center pixel (index size/2) holds
/// `center` out of every world channel.
PatchStack extract_patch(std::span<const Channel> world, Coord center, int size);

/// Window origin in world pixel coordinates for a patch of `size` centered on `center`.
std::optional<GridIndex> patch_window_origin(const RasterGrid& world, Coord center, int size);

}  // namespace focus
