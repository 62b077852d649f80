#include "focus/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "focus/error.hpp"
#include "focus/hydro.hpp"

namespace focus::baselines {

std::string_view hru_land_name(HruLand land) {
  switch (land) {
    case HruLand::Water: return "water";
    case HruLand::Developed: return "developed";
    case HruLand::Cropland: return "cropland";
    case HruLand::Natural: return "natural";
  }
  return "natural";
}

HruLand hru_land_of(int code) {
  if (landcover::is_water(code)) return HruLand::Water;
  if (landcover::is_developed(code)) return HruLand::Developed;
  if (landcover::group_of(code) == landcover::Group::Cropland) return HruLand::Cropland;
  return HruLand::Natural;
}

void HruTable::set(HruKey key, HruParams p) {
  if (!(p.infiltration >= 0.0 && p.infiltration <= 1.0 && p.runoff >= 0.0 && p.runoff <= 1.0) ||
      p.infiltration + p.runoff > 1.0 + 1e-12) {
    throw ValidationError("HRU row needs infiltration, runoff in [0,1] with infiltration + runoff <= 1");
  }
  rows_[key] = p;
}

const HruParams& HruTable::lookup(HruKey key) const {
  auto it = rows_.find(key);
  if (it == rows_.end()) {
    throw ValidationError("HRU table has no row for (" + std::string(hru_land_name(key.land)) + ", soil " +
                          std::to_string(key.soil) + ", slope band " + std::to_string(key.slope_band) + ")");
  }
  return it->second;
}

HruTable HruTable::defaults() {
  HruTable t;
  // Steeper bands shed more runoff and infiltrate less.
  const struct {
    HruLand land;
    double infiltration[3];
    double runoff[3];
  } rows[] = {
      {HruLand::Water, {0.00, 0.00, 0.00}, {0.60, 0.70, 0.80}},
      {HruLand::Developed, {0.05, 0.04, 0.03}, {0.40, 0.50, 0.60}},
      {HruLand::Cropland, {0.15, 0.12, 0.10}, {0.25, 0.35, 0.45}},
      {HruLand::Natural, {0.25, 0.20, 0.15}, {0.15, 0.25, 0.35}},
  };
  for (const auto& r : rows) {
    for (int band = 0; band < 3; ++band) t.set({r.land, 0, band}, {r.infiltration[band], r.runoff[band]});
  }
  return t;
}

HruTable HruTable::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("HRU CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "landcover,soil,slope_band,infiltration,runoff") {
    throw ValidationError("HRU CSV header must be landcover,soil,slope_band,infiltration,runoff");
  }
  HruTable t;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string land, soil, band, inf, run;
    if (!std::getline(row, land, ',') || !std::getline(row, soil, ',') || !std::getline(row, band, ',') ||
        !std::getline(row, inf, ',') || !std::getline(row, run)) {
      throw ValidationError("HRU CSV line " + std::to_string(line_no) + ": expected 5 columns");
    }
    HruLand l;
    if (land == "water") l = HruLand::Water;
    else if (land == "developed") l = HruLand::Developed;
    else if (land == "cropland") l = HruLand::Cropland;
    else if (land == "natural") l = HruLand::Natural;
    else throw ValidationError("HRU CSV line " + std::to_string(line_no) + ": unknown land class '" + land + "'");
    try {
      t.set({l, std::stoi(soil), std::stoi(band)}, {std::stod(inf), std::stod(run)});
    } catch (const std::invalid_argument&) {
      throw ValidationError("HRU CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return t;
}

HruTable HruTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open HRU table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string HruTable::format_csv() const {
  std::ostringstream out;
  out << "landcover,soil,slope_band,infiltration,runoff\n";
  for (const auto& [k, v] : rows_) {
    out << hru_land_name(k.land) << ',' << k.soil << ',' << k.slope_band << ',' << v.infiltration << ',' << v.runoff
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

int slope_band(double slope_percent, const TransportParams& p) {
  if (slope_percent < p.slope_edge_low) return 0;
  if (slope_percent < p.slope_edge_high) return 1;
  return 2;
}

double accumulation_scale(double accumulation, double max_accumulation) {
  return std::min(1.0, std::log(2.0 + accumulation) / std::log(2.0 + max_accumulation));
}

RasterGrid initial_concentration(const RasterGrid& lc, const RasterGrid& dischargers, const TransportParams& p) {
  if (!lc.same_geometry(dischargers)) throw ValidationError("discharger mask does not match the land cover");
  RasterGrid out(lc.width(), lc.height(), lc.cell_size(), lc.origin(), 0.0, lc.nodata());
  for (std::size_t i = 0; i < lc.size(); ++i) {
    double v = 0.0;
    switch (hru_land_of(static_cast<int>(lc.values()[i]))) {
      case HruLand::Water: v = p.water_default; break;
      case HruLand::Developed: v = p.urban_default; break;
      case HruLand::Cropland: v = p.cropland_default; break;
      case HruLand::Natural: v = p.natural_default; break;
    }
    if (dischargers.values()[i] != 0.0) v = p.discharger_value;
    out.values()[i] = v;
  }
  return out;
}

TransportResult transport_simulate(const RasterGrid& initial, const RasterGrid& lc, const RasterGrid& soil,
                                   const RasterGrid& slope, const RasterGrid& dirs, const RasterGrid& accum,
                                   const HruTable& hru, const TransportParams& params) {
  for (const RasterGrid* g : {&lc, &soil, &slope, &dirs, &accum}) {
    if (!g->same_geometry(initial)) throw ValidationError("transport_simulate: input grids differ in geometry");
  }
  const int w = initial.width();
  const int h = initial.height();
  const std::size_t n = initial.size();

  // Per-cell coefficients and downstream index (-1: sink, -2: leaves grid).
  std::vector<double> infil(n), send(n);
  std::vector<std::int64_t> target(n, -1);
  double amax = 0.0;
  for (double a : accum.values()) amax = std::max(amax, a);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = initial.index(r, c);
      const HruKey key{hru_land_of(static_cast<int>(lc.at(r, c))), static_cast<int>(soil.at(r, c)),
                       slope_band(slope.at(r, c), params)};
      const HruParams& hp = hru.lookup(key);
      infil[i] = hp.infiltration;
      const int code = static_cast<int>(dirs.at(r, c));
      if (auto s = hydro::step_for(code)) {
        send[i] = hp.runoff * accumulation_scale(accum.at(r, c), amax);
        const int rr = r + s->drow;
        const int cc = c + s->dcol;
        target[i] = initial.contains(rr, cc) ? static_cast<std::int64_t>(initial.index(rr, cc)) : -2;
      } else {
        send[i] = 0.0;
      }
    }
  }

  TransportResult res;
  res.concentration = initial;
  for (double v : initial.values()) res.initial_mass += v;
  std::vector<double> cur(initial.values().begin(), initial.values().end());
  std::vector<double> next(n);
  std::vector<double> dose(n, 0.0);
  MassLedger ledger;
  for (int step = 0; step < params.max_steps; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = cur[i];
      if (m == 0.0) continue;
      const double lost = m * infil[i];
      const double moved = m * send[i];
      next[i] += m - lost - moved;
      ledger.infiltrated += lost;
      if (target[i] >= 0) {
        next[static_cast<std::size_t>(target[i])] += moved;
      } else if (target[i] == -2) {
        ledger.exited += moved;
      }
    }
    double max_change = 0.0;
    double in_cells = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      max_change = std::max(max_change, std::abs(next[i] - cur[i]));
      in_cells += next[i];
      dose[i] += next[i];
    }
    ledger.in_cells = in_cells;
    res.ledger.push_back(ledger);
    cur.swap(next);
    res.steps = step + 1;
    if (max_change < params.tolerance) {
      res.converged = true;
      break;
    }
  }
  std::copy(cur.begin(), cur.end(), res.concentration.values().begin());
  res.exposure = initial;
  std::copy(dose.begin(), dose.end(), res.exposure.values().begin());
  return res;
}

TransportResult transport_simulate(const PatchStack& patch, const RasterGrid& dischargers, const HruTable& hru,
                                   const TransportParams& params) {
  const RasterGrid& lc = patch.require_role(ChannelRole::LandCover);
  const RasterGrid& dirs = patch.require_role(ChannelRole::FlowDir);
  const RasterGrid& soil = patch.require_role(ChannelRole::Soil);
  const RasterGrid& slope = patch.require_role(ChannelRole::Slope);
  const RasterGrid accum = hydro::flow_accumulation(dirs);
  return transport_simulate(initial_concentration(lc, dischargers, params), lc, soil, slope, dirs, accum, hru, params);
}

double pooled_median(std::span<const RasterGrid> rasters) {
  std::vector<double> all;
  for (const auto& r : rasters) {
    for (double v : r.values()) {
      if (!r.is_nodata(v)) all.push_back(v);
    }
  }
  if (all.empty()) throw ValidationError("threshold_by_median: no values");
  const std::size_t mid = all.size() / 2;
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid), all.end());
  const double upper = all[mid];
  if (all.size() % 2) return upper;
  const double lower = *std::max_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::vector<RasterGrid> threshold_by_median(std::span<const RasterGrid> rasters) {
  if (rasters.empty()) throw ValidationError("threshold_by_median: need at least one raster");
  const double median = pooled_median(rasters);
  std::vector<RasterGrid> out;
  for (const auto& r : rasters) {
    RasterGrid b = r;
    for (double& v : b.values()) {
      if (!r.is_nodata(v)) v = v >= median ? 1.0 : 0.0;
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace focus::baselines
