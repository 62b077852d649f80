#include "focus/rule_based.hpp"

#include <cmath>

#include "focus/error.hpp"
#include "focus/hydro.hpp"

namespace focus::baselines {

RulePrediction rule_based_predict(const PatchStack& patch, std::span<const labeling::SamplePoint> known,
                                  const RuleParams& params) {
  const auto& w = params.weights;
  w.validate();
  const double denom = w.dischargers + w.landcover + w.downstream;
  if (!(denom > 0.0)) throw ValidationError("rule_based_predict: discharger, land-cover and downstream weights are all 0");
  const RasterGrid& lc = patch.require_role(ChannelRole::LandCover);
  const RasterGrid dirs = hydro::clip_outward_directions(patch.require_role(ChannelRole::FlowDir));
  const auto dist = labeling::min_discharger_distance(patch);
  const auto frac = labeling::landcover_fractions(lc, params.noise.landcover_radius);
  const auto evidence = labeling::downstream_evidence(dirs, known);

  RulePrediction out{RasterGrid(lc.width(), lc.height(), lc.cell_size(), lc.origin(), lc.nodata(), lc.nodata()),
                     RasterGrid(lc.width(), lc.height(), lc.cell_size(), lc.origin(),
                                labeling::non_water_label(labeling::LabelMode::Binary), lc.nodata())};
  for (int r = 0; r < lc.height(); ++r) {
    for (int c = 0; c < lc.width(); ++c) {
      if (!landcover::is_water(static_cast<int>(lc.at(r, c)))) continue;
      const std::size_t i = lc.index(r, c);
      const double p_dis = std::exp(-dist[i] / params.noise.discharger_lambda);
      const double p_lc = frac.developed[i];
      const double p_ds = labeling::p_downstream(evidence, {r, c}, 1, params.noise.downstream_neutral);
      const double p = (w.dischargers * p_dis + w.landcover * p_lc + w.downstream * p_ds) / denom;
      out.probability.at(r, c) = p;
      out.labels.at(r, c) = p >= params.threshold ? 1.0 : 0.0;
    }
  }
  return out;
}

RasterGrid crop(const RasterGrid& g, int row0, int col0, int width, int height) {
  if (row0 < 0 || col0 < 0 || row0 + height > g.height() || col0 + width > g.width()) {
    throw OutOfBoundsError("crop: window exceeds the grid");
  }
  const Coord origin{g.origin().easting + col0 * g.cell_size(), g.origin().northing - row0 * g.cell_size()};
  RasterGrid out(width, height, g.cell_size(), origin, 0.0, g.nodata());
  for (int r = 0; r < height; ++r) {
    auto src = g.row(row0 + r).subspan(col0, width);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

RulePrediction rule_based_predict_window(std::span<const Channel> world, Coord center, int size,
                                         std::span<const labeling::SamplePoint> known, const RuleParams& params) {
  const int halo = params.noise.landcover_radius;
  const PatchStack wide = extract_patch(world, center, size + 2 * halo);
  const RulePrediction full = rule_based_predict(wide, known, params);
  return {crop(full.probability, halo, halo, size, size), crop(full.labels, halo, halo, size, size)};
}

}  // namespace focus::baselines
