#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "focus/hydro.hpp"
#include "focus/labeling.hpp"
#include "focus/raster.hpp"
#include "focus/rng.hpp"

namespace focus::testing {

inline constexpr double kCell = 30.0;

/// Random patch with land cover, D8 directions from a random DEM, one
/// discharger distance channel and soil/slope channels.
inline PatchStack random_patch(Rng& rng, int size, double water_share = 0.4) {
  const Coord origin{0.0, size * kCell};
  RasterGrid lc(size, size, kCell, origin);
  RasterGrid dem(size, size, kCell, origin);
  RasterGrid dis(size, size, kCell, origin, 0.0);
  const int land[] = {landcover::kDevelopedLow, landcover::kDevelopedHigh, landcover::kDeciduousForest,
                      landcover::kCultivatedCrops, landcover::kGrassland};
  for (std::size_t i = 0; i < lc.size(); ++i) {
    lc.values()[i] = rng.uniform() < water_share ? landcover::kOpenWater : land[rng.below(5)];
    dem.values()[i] = rng.uniform(0.0, 100.0);
  }
  const int n_dis = 1 + static_cast<int>(rng.below(4));
  for (int k = 0; k < n_dis; ++k) dis.values()[rng.below(dis.size())] = 1.0;
  PatchStack p;
  p.size = size;
  p.center = lc.cell_center(size / 2, size / 2);
  p.add("landcover", ChannelRole::LandCover, lc);
  p.add("flowdir", ChannelRole::FlowDir, hydro::d8_flow_direction(dem));
  p.add("dist_0", ChannelRole::Distance, distance_transform(dis).grid);
  p.add("soil", ChannelRole::Soil, RasterGrid(size, size, kCell, origin, 0.0));
  p.add("slope", ChannelRole::Slope, RasterGrid(size, size, kCell, origin, 1.0));
  return p;
}

inline labeling::SamplePoint make_sample(std::string id, Coord at, int label) {
  labeling::SamplePoint s;
  s.id = std::move(id);
  s.location = at;
  s.year = 2023;
  labeling::Compound c;
  c.name = "PFOS";
  c.threshold = 4.0;
  c.concentration = label ? 8.0 : 1.0;
  c.mdl = 0.04;
  s.compounds.push_back(c);
  s.label = label;
  return s;
}

/// Up to `n` samples on distinct water cells with random binary labels.
inline std::vector<labeling::SamplePoint> random_samples(Rng& rng, const PatchStack& patch, int n) {
  const RasterGrid& lc = patch.require_role(ChannelRole::LandCover);
  std::vector<std::size_t> water;
  for (std::size_t i = 0; i < lc.size(); ++i) {
    if (landcover::is_water(static_cast<int>(lc.values()[i]))) water.push_back(i);
  }
  rng.shuffle(std::span<std::size_t>(water));
  std::vector<labeling::SamplePoint> out;
  for (int k = 0; k < n && k < static_cast<int>(water.size()); ++k) {
    const int r = static_cast<int>(water[k] / lc.width());
    const int c = static_cast<int>(water[k] % lc.width());
    out.push_back(make_sample("S" + std::to_string(k), lc.cell_center(r, c), rng.uniform() < 0.5 ? 1 : 0));
  }
  return out;
}

/// Largest relative error between two gradients, with an absolute floor.
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace focus::testing
