#include "focus/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "focus/error.hpp"
#include "focus/hydro.hpp"

namespace focus::labeling {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LocatedSample {
  GridIndex cell;
  Coord center;
  const SamplePoint* sample;
};

std::vector<LocatedSample> locate_samples(const RasterGrid& grid, std::span<const SamplePoint> samples) {
  std::vector<LocatedSample> out;
  for (const auto& s : samples) {
    if (auto ix = grid.locate(s.location)) out.push_back({*ix, grid.cell_center(*ix), &s});
  }
  return out;
}

bool water_at(const RasterGrid& lc, int r, int c) { return landcover::is_water(static_cast<int>(lc.at(r, c))); }

}  // namespace

double hazard_index(std::span<const Compound> compounds) {
  if (compounds.empty()) throw ValidationError("hazard_index: empty compound list");
  double hi = 0.0;
  for (const auto& c : compounds) {
    if (!(c.threshold > 0.0)) throw ValidationError("hazard_index: threshold for " + c.name + " must be positive");
    if (c.concentration < 0.0) throw ValidationError("hazard_index: negative concentration for " + c.name);
    hi += c.concentration / c.threshold;
  }
  return hi;
}

int classify_sample(double hi, LabelMode mode) {
  if (mode == LabelMode::Binary) return hi >= 1.0 ? 1 : 0;
  if (hi < 1.0) return 0;
  return hi <= 1000.0 ? 1 : 2;
}

void assign_labels(std::span<SamplePoint> samples, LabelMode mode) {
  for (auto& s : samples) s.label = classify_sample(hazard_index(s.compounds), mode);
}

std::vector<SamplePoint> samples_inside(std::span<const SamplePoint> samples, const RasterGrid& grid) {
  std::vector<SamplePoint> out;
  for (const auto& s : samples) {
    if (grid.locate(s.location)) out.push_back(s);
  }
  return out;
}

RasterGrid expand_ground_truth(const PatchStack& patch, std::span<const SamplePoint> samples, LabelMode mode) {
  const RasterGrid& lc = patch.require_role(ChannelRole::LandCover);
  const auto located = locate_samples(lc, samples);
  if (located.empty()) throw ValidationError("expand_ground_truth: no sample lies inside the patch");
  RasterGrid mask(lc.width(), lc.height(), lc.cell_size(), lc.origin(), non_water_label(mode), lc.nodata());
  for (int r = 0; r < lc.height(); ++r) {
    for (int c = 0; c < lc.width(); ++c) {
      if (!water_at(lc, r, c)) continue;
      double best = kInf;
      int label = 0;
      for (const auto& s : located) {
        const double dr = s.cell.row - r;
        const double dc = s.cell.col - c;
        const double d2 = dr * dr + dc * dc;
        if (d2 < best) {
          best = d2;
          label = s.sample->label;
        }
      }
      mask.at(r, c) = label;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------

void NoiseWeights::validate() const {
  for (double w : {dischargers, landcover, sample_dist, downstream}) {
    if (!(w >= 0.0)) throw ValidationError("noise weights must be nonnegative");
  }
  const double sum = dischargers + landcover + sample_dist + downstream;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("noise weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

std::vector<double> min_discharger_distance(const PatchStack& patch) {
  const auto channels = patch.all_of_role(ChannelRole::Distance);
  if (channels.empty()) throw ValidationError("patch has no distance channels");
  std::vector<double> d(channels.front()->grid.size(), kInf);
  for (const Channel* ch : channels) {
    const auto vals = ch->grid.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!ch->grid.is_nodata(vals[i])) d[i] = std::min(d[i], vals[i]);
    }
  }
  return d;
}

double p_dischargers(const PatchStack& patch, GridIndex cell, int label, double decay_lambda) {
  if (!(decay_lambda > 0.0)) throw ValidationError("p_dischargers: decay lambda must be positive");
  double d = kInf;
  for (const Channel* ch : patch.all_of_role(ChannelRole::Distance)) {
    const double v = ch->grid.at(cell);
    if (!ch->grid.is_nodata(v)) d = std::min(d, v);
  }
  if (patch.all_of_role(ChannelRole::Distance).empty()) throw ValidationError("patch has no distance channels");
  const double near = std::exp(-d / decay_lambda);
  return is_positive(label) ? near : 1.0 - near;
}

double p_landcover(const PatchStack& patch, GridIndex cell, int label, int radius) {
  if (radius < 0) throw ValidationError("p_landcover: radius must be nonnegative");
  const RasterGrid& lc = patch.require_role(ChannelRole::LandCover);
  int total = 0;
  int developed = 0;
  int undeveloped = 0;
  for (int r = std::max(0, cell.row - radius); r <= std::min(lc.height() - 1, cell.row + radius); ++r) {
    for (int c = std::max(0, cell.col - radius); c <= std::min(lc.width() - 1, cell.col + radius); ++c) {
      const int code = static_cast<int>(lc.at(r, c));
      ++total;
      developed += landcover::is_developed(code);
      undeveloped += landcover::is_undeveloped(code);
    }
  }
  return static_cast<double>(is_positive(label) ? developed : undeveloped) / total;
}

double p_sample_dist(const PatchStack& patch, GridIndex cell, std::span<const SamplePoint> samples,
                     double decay_lambda) {
  if (!(decay_lambda > 0.0)) throw ValidationError("p_sample_dist: decay lambda must be positive");
  const RasterGrid& ref = patch.channels.at(0).grid;
  const auto located = locate_samples(ref, samples);
  if (located.empty()) throw ValidationError("p_sample_dist: no sample lies inside the patch");
  const Coord here = ref.cell_center(cell);
  double best = kInf;
  for (const auto& s : located) {
    best = std::min(best, std::hypot(s.center.easting - here.easting, s.center.northing - here.northing));
  }
  return std::exp(-best / decay_lambda);
}

DownstreamEvidence downstream_evidence(const RasterGrid& dirs, std::span<const SamplePoint> samples) {
  DownstreamEvidence ev{RasterGrid(dirs.width(), dirs.height(), dirs.cell_size(), dirs.origin()),
                        RasterGrid(dirs.width(), dirs.height(), dirs.cell_size(), dirs.origin())};
  for (const auto& s : locate_samples(dirs, samples)) {
    RasterGrid& target = is_positive(s.sample->label) ? ev.positive : ev.negative;
    for (const auto& ix : hydro::downstream_path(dirs, s.cell)) target.at(ix) = 1.0;
  }
  return ev;
}

double p_downstream(const DownstreamEvidence& evidence, GridIndex cell, int cell_label, double neutral) {
  const bool pos = evidence.positive.at(cell) != 0.0;
  const bool neg = evidence.negative.at(cell) != 0.0;
  const bool same = is_positive(cell_label) ? pos : neg;
  const bool opposite = is_positive(cell_label) ? neg : pos;
  if (same) return 1.0;
  if (opposite) return 0.0;
  return neutral;
}

double p_downstream(const PatchStack& patch, GridIndex cell, int cell_label, std::span<const SamplePoint> samples,
                    const RasterGrid& dirs) {
  if (dirs.width() != patch.size || dirs.height() != patch.size) {
    throw ValidationError("p_downstream: direction grid does not cover the patch");
  }
  return p_downstream(downstream_evidence(dirs, samples), cell, cell_label);
}

double mdl_multiplier(const SamplePoint& sample) {
  double m = 1.0;
  for (const auto& c : sample.compounds) {
    if (c.non_detect() && c.mdl > 0.0) m = std::min(m, std::min(1.0, c.threshold / c.mdl));
  }
  return m;
}

double combine(const NoiseWeights& w, double dischargers, double landcover, double sample_dist, double downstream) {
  return w.dischargers * dischargers + w.landcover * landcover + w.sample_dist * sample_dist +
         w.downstream * downstream;
}

NeighborhoodFractions landcover_fractions(const RasterGrid& lc, int radius) {
  if (radius < 0) throw ValidationError("landcover radius must be nonnegative");
  const int w = lc.width();
  const int h = lc.height();
  // Summed-area tables with a zero border row/column.
  std::vector<int> dev((w + 1) * static_cast<std::size_t>(h + 1), 0);
  std::vector<int> und(dev.size(), 0);
  auto at = [w](int r, int c) { return static_cast<std::size_t>(r) * (w + 1) + c; };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int code = static_cast<int>(lc.at(r, c));
      dev[at(r + 1, c + 1)] = landcover::is_developed(code) + dev[at(r, c + 1)] + dev[at(r + 1, c)] - dev[at(r, c)];
      und[at(r + 1, c + 1)] =
          landcover::is_undeveloped(code) + und[at(r, c + 1)] + und[at(r + 1, c)] - und[at(r, c)];
    }
  }
  NeighborhoodFractions out{std::vector<double>(lc.size()), std::vector<double>(lc.size())};
  for (int r = 0; r < h; ++r) {
    const int r0 = std::max(0, r - radius);
    const int r1 = std::min(h, r + radius + 1);
    for (int c = 0; c < w; ++c) {
      const int c0 = std::max(0, c - radius);
      const int c1 = std::min(w, c + radius + 1);
      const double total = static_cast<double>((r1 - r0) * (c1 - c0));
      const int nd = dev[at(r1, c1)] - dev[at(r0, c1)] - dev[at(r1, c0)] + dev[at(r0, c0)];
      const int nu = und[at(r1, c1)] - und[at(r0, c1)] - und[at(r1, c0)] + und[at(r0, c0)];
      out.developed[lc.index(r, c)] = nd / total;
      out.undeveloped[lc.index(r, c)] = nu / total;
    }
  }
  return out;
}

RasterGrid noise_mask(const PatchStack& patch, const RasterGrid& label_mask, std::span<const SamplePoint> samples,
                      const NoiseWeights& weights, const NoiseParams& params, LabelMode mode) {
  weights.validate();
  if (!(params.discharger_lambda > 0.0) || !(params.sample_lambda > 0.0)) {
    throw ValidationError("noise_mask: decay lambdas must be positive");
  }
  const RasterGrid& lc = patch.require_role(ChannelRole::LandCover);
  const RasterGrid& dirs = patch.require_role(ChannelRole::FlowDir);
  if (!label_mask.same_geometry(lc)) throw ValidationError("noise_mask: label mask does not match the patch");
  const auto located = locate_samples(lc, samples);
  if (located.empty()) throw ValidationError("noise_mask: no sample lies inside the patch");

  const auto dist = min_discharger_distance(patch);
  const auto frac = landcover_fractions(lc, params.landcover_radius);
  const auto evidence = downstream_evidence(dirs, samples);
  const int non_water = non_water_label(mode);

  RasterGrid mask(lc.width(), lc.height(), lc.cell_size(), lc.origin(), lc.nodata(), lc.nodata());
  for (int r = 0; r < lc.height(); ++r) {
    for (int c = 0; c < lc.width(); ++c) {
      if (!water_at(lc, r, c)) continue;
      const std::size_t i = lc.index(r, c);
      const int label = static_cast<int>(label_mask.at(r, c));
      if (label == non_water) throw ValidationError("noise_mask: label mask marks a water cell as non-water");
      const bool pos = is_positive(label);

      const double near = std::exp(-dist[i] / params.discharger_lambda);
      const double p_dis = pos ? near : 1.0 - near;
      const double p_lc = pos ? frac.developed[i] : frac.undeveloped[i];
      const Coord here = lc.cell_center(r, c);
      double d_min = kInf;
      for (const auto& s : located) {
        d_min = std::min(d_min, std::hypot(s.center.easting - here.easting, s.center.northing - here.northing));
      }
      const double p_sd = std::exp(-d_min / params.sample_lambda);
      const double p_ds = p_downstream(evidence, {r, c}, label, params.downstream_neutral);
      mask.at(r, c) = combine(weights, p_dis, p_lc, p_sd, p_ds);
    }
  }

  // Sample-cell overrides: negative samples first so a positive sample in
  // the same cell always wins.
  std::map<std::size_t, double> multipliers;
  for (const auto& s : located) {
    if (!water_at(lc, s.cell.row, s.cell.col) || is_positive(s.sample->label)) continue;
    const std::size_t i = lc.index(s.cell.row, s.cell.col);
    auto [it, fresh] = multipliers.emplace(i, 1.0);
    it->second = std::min(it->second, mdl_multiplier(*s.sample));
  }
  for (const auto& [i, m] : multipliers) mask.values()[i] *= m;
  for (const auto& s : located) {
    if (!water_at(lc, s.cell.row, s.cell.col) || !is_positive(s.sample->label)) continue;
    mask.at(s.cell) = 1.0;
  }
  return mask;
}

}  // namespace focus::labeling
