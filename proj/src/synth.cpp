#include "focus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "focus/error.hpp"
#include "focus/hydro.hpp"
#include "focus/patch_io.hpp"
#include "focus/rng.hpp"
#include "focus/transport.hpp"

namespace focus::synth {
namespace {

double lattice(std::uint64_t seed, long long ix, long long iy) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL ^
                                                 splitmix64(static_cast<std::uint64_t>(iy))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double single_octave(std::uint64_t seed, double x, double y, double period) {
  const double gx = x / period;
  const double gy = y / period;
  const double fx = std::floor(gx);
  const double fy = std::floor(gy);
  const auto ix = static_cast<long long>(fx);
  const auto iy = static_cast<long long>(fy);
  const double tx = smooth(gx - fx);
  const double ty = smooth(gy - fy);
  const double a = lattice(seed, ix, iy);
  const double b = lattice(seed, ix + 1, iy);
  const double c = lattice(seed, ix, iy + 1);
  const double d = lattice(seed, ix + 1, iy + 1);
  const double top = a + (b - a) * tx;
  const double bottom = c + (d - c) * tx;
  return top + (bottom - top) * ty;
}

/// Cell indices sorted by descending key, ties by ascending index.
std::vector<std::size_t> rank_desc(const std::vector<double>& key, const std::vector<std::size_t>& cells) {
  std::vector<std::size_t> out = cells;
  std::stable_sort(out.begin(), out.end(), [&key](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return out;
}

RasterGrid blank(const WorldSpec& s, double fill = 0.0) {
  return RasterGrid(s.extent, s.extent, s.cell_size, s.origin, fill);
}

}  // namespace

void WorldSpec::validate() const {
  if (extent < 512) throw ValidationError("world extent must be at least 512 cells");
  if (!(cell_size > 0.0)) throw ValidationError("world cell size must be positive");
  if (!(urban_fraction >= 0.0 && urban_fraction <= 1.0)) throw ValidationError("urban_fraction must lie in [0,1]");
  if (!(water_fraction >= 0.0 && water_fraction <= 1.0)) throw ValidationError("water_fraction must lie in [0,1]");
  if (urban_fraction + water_fraction > 1.0) {
    throw ValidationError("urban_fraction + water_fraction exceeds 1");
  }
  if (n_dischargers < 0) throw ValidationError("n_dischargers must be nonnegative");
  if (n_industries < 1) throw ValidationError("n_industries must be at least 1");
}

double value_noise(std::uint64_t seed, double x, double y, double period, int octaves) {
  double sum = 0.0;
  double norm = 0.0;
  double amp = 1.0;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * single_octave(seed + static_cast<std::uint64_t>(o) * 7919, x, y, period);
    norm += amp;
    amp *= 0.5;
    period *= 0.5;
  }
  return sum / norm;
}

RasterGrid fill_depressions(const RasterGrid& dem, double epsilon) {
  RasterGrid out = dem;
  const int w = dem.width();
  const int h = dem.height();
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  std::vector<std::uint8_t> closed(dem.size(), 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (r == 0 || c == 0 || r == h - 1 || c == w - 1) {
        const std::size_t i = dem.index(r, c);
        closed[i] = 1;
        open.push({out.values()[i], i});
      }
    }
  }
  while (!open.empty()) {
    const auto [z, i] = open.top();
    open.pop();
    const int r = static_cast<int>(i / w);
    const int c = static_cast<int>(i % w);
    for (const auto& s : hydro::kSteps) {
      const int rr = r + s.drow;
      const int cc = c + s.dcol;
      if (!dem.contains(rr, cc)) continue;
      const std::size_t j = dem.index(rr, cc);
      if (closed[j]) continue;
      closed[j] = 1;
      double& zj = out.values()[j];
      if (zj <= z + epsilon) zj = z + epsilon;
      open.push({zj, j});
    }
  }
  return out;
}

RasterGrid slope_percent(const RasterGrid& dem) {
  RasterGrid out(dem.width(), dem.height(), dem.cell_size(), dem.origin(), 0.0, dem.nodata());
  const int w = dem.width();
  const int h = dem.height();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int c0 = std::max(0, c - 1), c1 = std::min(w - 1, c + 1);
      const int r0 = std::max(0, r - 1), r1 = std::min(h - 1, r + 1);
      const double dx = (dem.at(r, c1) - dem.at(r, c0)) / ((c1 - c0) * dem.cell_size());
      const double dy = (dem.at(r1, c) - dem.at(r0, c)) / ((r1 - r0) * dem.cell_size());
      out.at(r, c) = 100.0 * std::hypot(dx, dy);
    }
  }
  return out;
}

World generate_world(const WorldSpec& spec) {
  spec.validate();
  const int n = spec.extent;
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  World world;
  world.spec = spec;

  RasterGrid raw = blank(spec);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      raw.at(r, c) = spec.relief * value_noise(spec.seed, c, r, n / 4.0, 5) + spec.tilt * (1.0 - r / double(n));
    }
  }
  RasterGrid dem = fill_depressions(raw);
  RasterGrid accum = hydro::flow_accumulation(hydro::d8_flow_direction(dem));

  // Water: the highest-accumulation cells; the set is closed downstream.
  std::vector<std::size_t> all(cells);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> by_flow = all;
  std::stable_sort(by_flow.begin(), by_flow.end(), [&](std::size_t a, std::size_t b) {
    const double fa = accum.values()[a], fb = accum.values()[b];
    if (fa != fb) return fa > fb;
    return dem.values()[a] < dem.values()[b];
  });
  const auto n_water = static_cast<std::size_t>(std::llround(spec.water_fraction * cells));
  std::vector<std::uint8_t> water(cells, 0);
  for (std::size_t k = 0; k < n_water; ++k) water[by_flow[k]] = 1;
  for (std::size_t i = 0; i < cells; ++i) {
    if (water[i]) dem.values()[i] -= spec.carve_depth;
  }
  world.dem = dem;
  world.flowdir = hydro::d8_flow_direction(dem);
  world.accumulation = hydro::flow_accumulation(world.flowdir);
  world.slope = slope_percent(dem);
  world.soil = blank(spec, 0.0);

  // Land cover.
  std::vector<double> urban_key(cells), other_key(cells);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      urban_key[dem.index(r, c)] = value_noise(spec.seed + 101, c, r, n / 8.0, 4);
      other_key[dem.index(r, c)] = value_noise(spec.seed + 202, c, r, n / 10.0, 4);
    }
  }
  std::vector<std::size_t> land;
  for (std::size_t i = 0; i < cells; ++i) {
    if (!water[i]) land.push_back(i);
  }
  world.landcover = blank(spec, landcover::kOpenWater);
  auto lc = world.landcover.values();
  const auto n_urban = static_cast<std::size_t>(std::llround(spec.urban_fraction * cells));
  const auto urban_rank = rank_desc(urban_key, land);
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < urban_rank.size(); ++k) {
    const std::size_t i = urban_rank[k];
    const bool odd = splitmix64(spec.seed ^ (i * 31 + 7)) & 1;
    if (k < n_urban / 3) {
      lc[i] = odd ? landcover::kDevelopedHigh : landcover::kDevelopedMedium;
    } else if (k < n_urban) {
      lc[i] = odd ? landcover::kDevelopedLow : landcover::kDevelopedOpen;
    } else {
      rest.push_back(i);
    }
  }
  const auto other_rank = rank_desc(other_key, rest);
  const double m = static_cast<double>(other_rank.size());
  for (std::size_t k = 0; k < other_rank.size(); ++k) {
    const std::size_t i = other_rank[k];
    const double q = k / m;
    const std::uint64_t hsh = splitmix64(spec.seed ^ (i * 131 + 3));
    if (q < 0.35) {
      const int forest[] = {landcover::kDeciduousForest, landcover::kEvergreenForest, landcover::kMixedForest};
      lc[i] = forest[hsh % 3];
    } else if (q < 0.65) {
      lc[i] = (hsh & 1) ? landcover::kCultivatedCrops : landcover::kPasture;
    } else if (q < 0.70) {
      lc[i] = landcover::kBarren;
    } else if (q < 0.92) {
      lc[i] = (hsh & 1) ? landcover::kGrassland : landcover::kShrub;
    } else {
      lc[i] = landcover::kWoodyWetlands;
    }
  }

  // Dischargers: weighted by the developed share around developed cells.
  Rng rng(spec.seed ^ 0xD15C4A12ULL);
  const auto frac = labeling::landcover_fractions(world.landcover, 5);
  std::vector<double> cum;
  std::vector<std::size_t> cand;
  double total = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    if (!landcover::is_developed(static_cast<int>(lc[i]))) continue;
    total += frac.developed[i];
    cum.push_back(total);
    cand.push_back(i);
  }
  const std::size_t want = std::min<std::size_t>(spec.n_dischargers, cand.size());
  std::vector<std::uint8_t> taken(cand.size(), 0);
  std::vector<std::pair<std::size_t, int>> placed;
  for (std::size_t attempt = 0; placed.size() < want && attempt < 100 * want + 100; ++attempt) {
    const double u = rng.uniform() * total;
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()), cand.size() - 1);
    if (taken[k]) continue;
    taken[k] = 1;
    placed.emplace_back(cand[k], static_cast<int>(rng.below(spec.n_industries)));
  }
  // Row-major order, the order a world file is read back in.
  std::sort(placed.begin(), placed.end());
  for (const auto& [i, industry] : placed) {
    world.dischargers.push_back(world.landcover.cell_center(static_cast<int>(i / n), static_cast<int>(i % n)));
    world.discharger_industry.push_back(industry);
  }

  RasterGrid all_dis = blank(spec, 0.0);
  for (int k = 0; k < spec.n_industries; ++k) {
    std::vector<Coord> pts;
    for (std::size_t d = 0; d < world.dischargers.size(); ++d) {
      if (world.discharger_industry[d] == k) pts.push_back(world.dischargers[d]);
    }
    const RasterGrid mask = rasterize_points(pts, all_dis).grid;
    for (std::size_t i = 0; i < cells; ++i) all_dis.values()[i] = std::max(all_dis.values()[i], mask.values()[i]);
    world.distance.push_back(distance_transform(mask).grid);
  }

  const auto hru = baselines::HruTable::defaults();
  baselines::TransportParams tp;
  const RasterGrid init = baselines::initial_concentration(world.landcover, all_dis, tp);
  // The planted field is the time-integrated load: cells that drain many
  // sources stay contaminated even after the pulse has passed.
  world.truth = baselines::transport_simulate(init, world.landcover, world.soil, world.slope, world.flowdir,
                                              world.accumulation, hru, tp)
                    .exposure;
  return world;
}

std::vector<Channel> World::channels(bool include_dem) const {
  std::vector<Channel> out;
  out.push_back({"landcover", ChannelRole::LandCover, landcover});
  out.push_back({"flowdir", ChannelRole::FlowDir, flowdir});
  for (std::size_t k = 0; k < distance.size(); ++k) {
    out.push_back({"dist_" + std::to_string(k), ChannelRole::Distance, distance[k]});
  }
  if (include_dem) out.push_back({"dem", ChannelRole::Dem, dem});
  out.push_back({"soil", ChannelRole::Soil, soil});
  out.push_back({"slope", ChannelRole::Slope, slope});
  return out;
}

void write_world(const World& world, const std::filesystem::path& path) {
  PatchStack stack;
  stack.size = world.spec.extent;
  stack.center = world.landcover.cell_center(world.spec.extent / 2, world.spec.extent / 2);
  stack.channels = world.channels(true);
  RasterGrid dis(world.spec.extent, world.spec.extent, world.spec.cell_size, world.spec.origin, 0.0);
  for (std::size_t d = 0; d < world.dischargers.size(); ++d) {
    dis.at(*dis.locate(world.dischargers[d])) = world.discharger_industry[d] + 1;
  }
  stack.add("dischargers", ChannelRole::Other, std::move(dis));
  stack.add("accumulation", ChannelRole::Other, world.accumulation);
  stack.add("truth", ChannelRole::Other, world.truth);
  write_patch(stack, path);
}

World read_world(const std::filesystem::path& path) {
  const PatchStack stack = read_patch(path);
  auto need = [&stack](const char* name) -> const RasterGrid& {
    const Channel* ch = stack.find(name);
    if (!ch) throw FormatError("world file lacks channel '" + std::string(name) + "'");
    return ch->grid;
  };
  World w;
  w.landcover = need("landcover");
  w.flowdir = need("flowdir");
  w.dem = need("dem");
  w.soil = need("soil");
  w.slope = need("slope");
  w.accumulation = need("accumulation");
  w.truth = need("truth");
  for (const Channel* ch : stack.all_of_role(ChannelRole::Distance)) w.distance.push_back(ch->grid);
  w.spec.extent = w.landcover.width();
  w.spec.cell_size = w.landcover.cell_size();
  w.spec.origin = w.landcover.origin();
  w.spec.n_industries = static_cast<int>(w.distance.size());
  const RasterGrid& dis = need("dischargers");
  for (int r = 0; r < dis.height(); ++r) {
    for (int c = 0; c < dis.width(); ++c) {
      if (dis.at(r, c) != 0.0) {
        w.dischargers.push_back(dis.cell_center(r, c));
        w.discharger_industry.push_back(static_cast<int>(dis.at(r, c)) - 1);
      }
    }
  }
  w.spec.n_dischargers = static_cast<int>(w.dischargers.size());
  return w;
}

// ---------------------------------------------------------------------------

std::vector<labeling::SamplePoint> sample_points(const World& world, const SampleConfig& cfg) {
  if (cfg.n < 2) throw ValidationError("sample_points: need at least 2 samples");
  if (!(cfg.positive_fraction >= 0.0 && cfg.positive_fraction <= 1.0)) {
    throw ValidationError("sample_points: positive fraction must lie in [0,1]");
  }
  const RasterGrid& lc = world.landcover;
  std::vector<std::size_t> cand;
  for (int r = cfg.margin; r < lc.height() - cfg.margin; ++r) {
    for (int c = cfg.margin; c < lc.width() - cfg.margin; ++c) {
      if (landcover::is_water(static_cast<int>(lc.at(r, c)))) cand.push_back(lc.index(r, c));
    }
  }
  if (cand.size() < static_cast<std::size_t>(cfg.n)) {
    throw ValidationError("sample_points: only " + std::to_string(cand.size()) + " eligible water cells for " +
                          std::to_string(cfg.n) + " samples");
  }
  Rng rng(cfg.seed ^ 0x5A3B1E5ULL);
  // Partial Fisher-Yates: the first n entries become the sample.
  for (int k = 0; k < cfg.n; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(cand.size() - k));
    std::swap(cand[k], cand[j]);
  }
  cand.resize(cfg.n);

  std::vector<double> score(cfg.n);
  for (int k = 0; k < cfg.n; ++k) {
    score[k] = std::log1p(world.truth.values()[cand[k]]);
    if (cfg.label_noise > 0.0) score[k] += cfg.label_noise * rng.normal();
  }
  const auto n_neg = static_cast<std::size_t>(std::llround((1.0 - cfg.positive_fraction) * cfg.n));
  std::vector<std::size_t> order(cfg.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&score](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  std::vector<int> label(cfg.n, 1);
  for (std::size_t k = 0; k < n_neg; ++k) label[order[k]] = 0;

  struct Spec {
    const char* name;
    double threshold;
  };
  const Spec compounds[] = {{"PFOA", 4.0}, {"PFOS", 4.0}, {"PFHxS", 10.0}};
  std::vector<labeling::SamplePoint> out;
  for (int k = 0; k < cfg.n; ++k) {
    labeling::SamplePoint s;
    s.id = "S" + std::to_string(k + 1);
    s.location = lc.cell_center(static_cast<int>(cand[k] / lc.width()), static_cast<int>(cand[k] % lc.width()));
    s.year = cfg.year;
    const double hi = label[k] ? rng.uniform(1.2, 20.0) : rng.uniform(0.05, 0.9);
    // Some negatives carry a non-detect whose MDL exceeds its threshold.
    const bool non_detect = !label[k] && rng.uniform() < 0.3;
    double shares[3];
    double total = 0.0;
    for (double& sh : shares) total += (sh = rng.uniform(0.2, 1.0));
    if (non_detect) {
      total -= shares[2];
      shares[2] = 0.0;
    }
    for (int i = 0; i < 3; ++i) {
      labeling::Compound c;
      c.name = compounds[i].name;
      c.threshold = compounds[i].threshold;
      c.concentration = hi * shares[i] / total * c.threshold;
      c.mdl = 0.01 * c.threshold;
      if (non_detect && i == 2) c.mdl = c.threshold * rng.uniform(1.2, 3.0);
      s.compounds.push_back(c);
    }
    s.label = labeling::classify_sample(labeling::hazard_index(s.compounds), labeling::LabelMode::Binary);
    if (s.label != label[k]) throw NumericError("sample_points: synthesized compounds disagree with the label");
    out.push_back(std::move(s));
  }
  return out;
}

bool windows_overlap(GridIndex a, GridIndex b, int size) {
  return std::abs(a.row - b.row) < size && std::abs(a.col - b.col) < size;
}

SplitResult disjoint_split(std::span<const labeling::SamplePoint> samples, const RasterGrid& ref, int size,
                           std::span<const double> fractions) {
  if (samples.size() < 2) throw ValidationError("disjoint_split: need at least 2 samples");
  if (fractions.empty()) throw ValidationError("disjoint_split: no split fractions");
  double fsum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ValidationError("disjoint_split: fractions must be nonnegative");
    fsum += f;
  }
  if (std::abs(fsum - 1.0) > 1e-9) throw ValidationError("disjoint_split: fractions must sum to 1");
  const std::size_t n = samples.size();
  std::vector<GridIndex> cell(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto ix = ref.locate(samples[i].location);
    if (!ix) throw ValidationError("disjoint_split: sample " + samples[i].id + " lies outside the reference grid");
    cell[i] = *ix;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (windows_overlap(cell[i], cell[j], size)) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<std::size_t>> comps;
  std::vector<long> comp_of(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (comp_of[root] < 0) {
      comp_of[root] = static_cast<long>(comps.size());
      comps.emplace_back();
    }
    comps[comp_of[root]].push_back(i);
  }
  std::stable_sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

  SplitResult res;
  res.assignment.assign(n, -1);
  res.members.assign(fractions.size(), {});
  std::vector<double> filled(fractions.size(), 0.0);
  for (const auto& comp : comps) {
    std::size_t best = 0;
    double best_gap = -1e300;
    for (std::size_t s = 0; s < fractions.size(); ++s) {
      const double gap = fractions[s] * n - filled[s];
      if (gap > best_gap) {
        best_gap = gap;
        best = s;
      }
    }
    filled[best] += static_cast<double>(comp.size());
    for (std::size_t i : comp) {
      res.assignment[i] = static_cast<int>(best);
      res.members[best].push_back(i);
    }
  }
  for (auto& m : res.members) std::sort(m.begin(), m.end());
  for (std::size_t s = 0; s < fractions.size(); ++s) {
    if (fractions[s] > 0.0 && res.members[s].empty()) {
      throw ValidationError("disjoint_split: overlapping windows form " + std::to_string(comps.size()) +
                            " group(s), so a geographically disjoint split at the requested fractions is impossible");
    }
  }
  return res;
}

}  // namespace focus::synth
