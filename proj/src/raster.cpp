#include "focus/raster.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "focus/error.hpp"

namespace focus {

RasterGrid::RasterGrid(int width, int height, double cell_size, Coord origin, double fill, double nodata)
    : width_(width), height_(height), cell_size_(cell_size), origin_(origin), nodata_(nodata) {
  if (width < 0 || height < 0) throw ValidationError("raster dimensions must be nonnegative");
  if (!(cell_size > 0.0)) throw ValidationError("raster cell_size must be positive");
  values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Coord RasterGrid::cell_center(int row, int col) const {
  return {origin_.easting + (col + 0.5) * cell_size_, origin_.northing - (row + 0.5) * cell_size_};
}

std::optional<GridIndex> RasterGrid::locate(Coord p) const {
  const double fx = std::floor((p.easting - origin_.easting) / cell_size_);
  const double fy = std::floor((origin_.northing - p.northing) / cell_size_);
  if (!(fx >= 0.0 && fy >= 0.0 && fx < width_ && fy < height_)) return std::nullopt;
  return GridIndex{static_cast<int>(fy), static_cast<int>(fx)};
}

bool RasterGrid::same_geometry(const RasterGrid& other) const {
  return width_ == other.width_ && height_ == other.height_ && cell_size_ == other.cell_size_ &&
         origin_ == other.origin_;
}

bool RasterGrid::operator==(const RasterGrid& other) const {
  if (!same_geometry(other)) return false;
  if (std::bit_cast<std::uint64_t>(nodata_) != std::bit_cast<std::uint64_t>(other.nodata_)) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(values_[i]) != std::bit_cast<std::uint64_t>(other.values_[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace landcover {

bool is_valid(int code) { return std::find(std::begin(kAllCodes), std::end(kAllCodes), code) != std::end(kAllCodes); }

bool is_water(int code) { return code == kOpenWater; }

bool is_developed(int code) { return code >= kDevelopedOpen && code <= kDevelopedHigh; }

bool is_undeveloped(int code) { return !is_water(code) && !is_developed(code); }

Group group_of(int code) {
  switch (code) {
    case kOpenWater:
      return Group::Water;
    case kDevelopedOpen:
    case kDevelopedLow:
      return Group::DevelopedLow;
    case kDevelopedMedium:
    case kDevelopedHigh:
      return Group::DevelopedHigh;
    case kDeciduousForest:
    case kEvergreenForest:
    case kMixedForest:
      return Group::Forest;
    case kBarren:
      return Group::Barren;
    case kPasture:
    case kCultivatedCrops:
      return Group::Cropland;
    default:
      return Group::Other;
  }
}

std::string_view group_name(Group g) {
  switch (g) {
    case Group::Water: return "water";
    case Group::DevelopedLow: return "developed_low";
    case Group::DevelopedHigh: return "developed_high";
    case Group::Forest: return "forest";
    case Group::Barren: return "barren";
    case Group::Cropland: return "cropland";
    case Group::Other: return "other";
  }
  return "other";
}

}  // namespace landcover

// ---------------------------------------------------------------------------

std::string_view role_name(ChannelRole role) {
  switch (role) {
    case ChannelRole::LandCover: return "landcover";
    case ChannelRole::FlowDir: return "flowdir";
    case ChannelRole::Distance: return "distance";
    case ChannelRole::Dem: return "dem";
    case ChannelRole::Soil: return "soil";
    case ChannelRole::Slope: return "slope";
    case ChannelRole::Label: return "label";
    case ChannelRole::Noise: return "noise";
    case ChannelRole::Other: return "other";
  }
  return "other";
}

ChannelRole parse_role(std::string_view name) {
  for (auto r : {ChannelRole::LandCover, ChannelRole::FlowDir, ChannelRole::Distance, ChannelRole::Dem,
                 ChannelRole::Soil, ChannelRole::Slope, ChannelRole::Label, ChannelRole::Noise,
                 ChannelRole::Other}) {
    if (role_name(r) == name) return r;
  }
  throw FormatError("unknown channel role '" + std::string(name) + "'");
}

void PatchStack::validate_structure() const {
  if (size <= 0) throw ValidationError("patch size must be positive");
  std::set<std::string> names;
  const RasterGrid* first = nullptr;
  for (const auto& ch : channels) {
    if (ch.name.empty()) throw ValidationError("channel names must be nonempty");
    if (!names.insert(ch.name).second) throw ValidationError("duplicate channel name '" + ch.name + "'");
    if (ch.grid.width() != size || ch.grid.height() != size) {
      throw ValidationError("channel '" + ch.name + "' is not " + std::to_string(size) + "x" + std::to_string(size));
    }
    if (first && !first->same_geometry(ch.grid)) {
      throw ValidationError("channel '" + ch.name + "' has a different origin or cell size");
    }
    first = first ? first : &ch.grid;
  }
}

void PatchStack::validate() const {
  validate_structure();
  int landcover_count = 0;
  int flowdir_count = 0;
  int dem_count = 0;
  for (const auto& ch : channels) {
    switch (ch.role) {
      case ChannelRole::LandCover:
        ++landcover_count;
        for (double v : ch.grid.values()) {
          if (!landcover::is_valid(static_cast<int>(v)) || static_cast<double>(static_cast<int>(v)) != v) {
            throw ValidationError("land-cover channel '" + ch.name + "' holds unknown code " + std::to_string(v));
          }
        }
        break;
      case ChannelRole::FlowDir: ++flowdir_count; break;
      case ChannelRole::Dem: ++dem_count; break;
      default: break;
    }
  }
  if (landcover_count != 1) throw ValidationError("patch needs exactly one land-cover channel");
  if (flowdir_count != 1) throw ValidationError("patch needs exactly one flow-direction channel");
  if (dem_count > 1) throw ValidationError("patch has more than one DEM channel");
}

const Channel* PatchStack::find(std::string_view name) const {
  for (const auto& ch : channels) {
    if (ch.name == name) return &ch;
  }
  return nullptr;
}

const Channel* PatchStack::find_role(ChannelRole role) const {
  for (const auto& ch : channels) {
    if (ch.role == role) return &ch;
  }
  return nullptr;
}

const RasterGrid& PatchStack::require_role(ChannelRole role) const {
  const Channel* ch = find_role(role);
  if (!ch) throw ValidationError("patch has no '" + std::string(role_name(role)) + "' channel");
  return ch->grid;
}

std::vector<const Channel*> PatchStack::all_of_role(ChannelRole role) const {
  std::vector<const Channel*> out;
  for (const auto& ch : channels) {
    if (ch.role == role) out.push_back(&ch);
  }
  return out;
}

void PatchStack::add(std::string name, ChannelRole role, RasterGrid grid) {
  channels.push_back({std::move(name), role, std::move(grid)});
}

void PatchStack::set(std::string name, ChannelRole role, RasterGrid grid) {
  for (auto& ch : channels) {
    if (ch.name == name) {
      ch.role = role;
      ch.grid = std::move(grid);
      return;
    }
  }
  add(std::move(name), role, std::move(grid));
}

// ---------------------------------------------------------------------------

RasterizeResult rasterize_points(std::span<const Coord> points, const RasterGrid& template_grid) {
  if (template_grid.width() <= 0 || template_grid.height() <= 0) {
    throw ValidationError("rasterize_points: template must have positive dimensions");
  }
  RasterizeResult out{RasterGrid(template_grid.width(), template_grid.height(), template_grid.cell_size(),
                                 template_grid.origin(), 0.0, template_grid.nodata()),
                      0};
  for (const Coord& p : points) {
    if (auto ix = out.grid.locate(p)) {
      out.grid.at(*ix) = 1.0;
    } else {
      ++out.dropped;
    }
  }
  return out;
}

namespace {

/// Lower envelope of parabolas over one line (Felzenszwalb & Huttenlocher).
/// `f` holds squared distances (or +inf), `d` receives the transform.
void edt_1d(std::span<const double> f, std::span<double> d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    while (k >= 0) {
      const int p = v[k];
      const double s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -inf : ((f[q] + double(q) * q) - (f[v[k - 1]] + double(v[k - 1]) * v[k - 1])) /
                               (2.0 * (q - v[k - 1]));
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = double(q - v[j]);
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::vector<double> squared_edt(std::span<const std::uint8_t> mask, int width, int height) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = mask[i] ? 0.0 : inf;

  const int longest = std::max(width, height);
  std::vector<double> f(longest), d(longest), z(longest + 1);
  std::vector<int> v(longest);

  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < height; ++r) f[r] = grid[static_cast<std::size_t>(r) * width + c];
    edt_1d(std::span(f).first(height), std::span(d).first(height), v, z);
    for (int r = 0; r < height; ++r) grid[static_cast<std::size_t>(r) * width + c] = d[r];
  }
  for (int r = 0; r < height; ++r) {
    auto row = std::span(grid).subspan(static_cast<std::size_t>(r) * width, width);
    std::copy(row.begin(), row.end(), f.begin());
    edt_1d(std::span(f).first(width), std::span(d).first(width), v, z);
    std::copy(d.begin(), d.begin() + width, row.begin());
  }
  return grid;
}

DistanceResult distance_transform(const RasterGrid& source) {
  std::vector<std::uint8_t> mask(source.size());
  bool any = false;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double v = source.values()[i];
    if (v != 0.0 && v != 1.0) throw ValidationError("distance_transform: source must be binary");
    mask[i] = v == 1.0;
    any = any || mask[i];
  }
  DistanceResult out{RasterGrid(source.width(), source.height(), source.cell_size(), source.origin(), 0.0,
                                source.nodata()),
                     !any};
  if (!any) {
    std::fill(out.grid.values().begin(), out.grid.values().end(), source.nodata());
    return out;
  }
  const auto sq = squared_edt(mask, source.width(), source.height());
  auto dst = out.grid.values();
  for (std::size_t i = 0; i < sq.size(); ++i) dst[i] = std::sqrt(sq[i]) * source.cell_size();
  return out;
}

std::optional<GridIndex> patch_window_origin(const RasterGrid& world, Coord center, int size) {
  auto ix = world.locate(center);
  if (!ix) return std::nullopt;
  return GridIndex{ix->row - size / 2, ix->col - size / 2};
}

PatchStack extract_patch(std::span<const Channel> world, Coord center, int size) {
  if (size <= 0) throw ValidationError("extract_patch: size must be positive");
  PatchStack patch;
  patch.size = size;
  patch.center = center;
  for (const Channel& ch : world) {
    const RasterGrid& g = ch.grid;
    auto ix = g.locate(center);
    if (!ix) throw OutOfBoundsError("extract_patch: center lies outside channel '" + ch.name + "'");
    const int r0 = ix->row - size / 2;
    const int c0 = ix->col - size / 2;
    if (r0 < 0 || c0 < 0 || r0 + size > g.height() || c0 + size > g.width()) {
      throw OutOfBoundsError("extract_patch: " + std::to_string(size) + "-pixel window at row " +
                             std::to_string(r0) + ", col " + std::to_string(c0) + " exceeds channel '" + ch.name +
                             "'");
    }
    const Coord origin{g.origin().easting + c0 * g.cell_size(), g.origin().northing - r0 * g.cell_size()};
    RasterGrid out(size, size, g.cell_size(), origin, 0.0, g.nodata());
    for (int r = 0; r < size; ++r) {
      auto src = g.row(r0 + r).subspan(c0, size);
      std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    patch.channels.push_back({ch.name, ch.role, std::move(out)});
  }
  return patch;
}

}  // namespace focus
