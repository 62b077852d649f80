#include <doctest.h>

#include <cmath>

#include "focus/error.hpp"
#include "focus/labeling.hpp"
#include "support.hpp"

using namespace focus;
using namespace focus::labeling;
using focus::testing::kCell;
using focus::testing::make_sample;

namespace {

Compound compound(double c, double t, double mdl = 0.0) {
  Compound x;
  x.name = "X";
  x.concentration = c;
  x.threshold = t;
  x.mdl = mdl;
  return x;
}

/// Uniform patch of one land-cover code with straight east-flowing directions.
PatchStack uniform_patch(int size, int code, double dist = 0.0) {
  const Coord origin{0.0, size * kCell};
  PatchStack p;
  p.size = size;
  p.add("landcover", ChannelRole::LandCover, RasterGrid(size, size, kCell, origin, code));
  p.add("flowdir", ChannelRole::FlowDir, RasterGrid(size, size, kCell, origin, 1.0));
  p.add("dist_0", ChannelRole::Distance, RasterGrid(size, size, kCell, origin, dist));
  return p;
}

}  // namespace

TEST_CASE("hazard index sums concentration ratios") {
  const Compound one[] = {compound(4, 4)};
  CHECK(hazard_index(one) == 1.0);
  const Compound halves[] = {compound(1, 2), compound(3, 6)};
  CHECK(hazard_index(halves) == 1.0);
  const Compound mixed[] = {compound(2, 4), compound(3, 1)};
  CHECK(hazard_index(mixed) == 3.5);
  CHECK_THROWS_AS(hazard_index(std::span<const Compound>{}), ValidationError);
  const Compound bad[] = {compound(1, 0)};
  CHECK_THROWS_AS(hazard_index(bad), ValidationError);
}

TEST_CASE("sample classification thresholds") {
  CHECK(classify_sample(0.99, LabelMode::Binary) == 0);
  CHECK(classify_sample(1.0, LabelMode::Binary) == 1);
  CHECK(classify_sample(0.5, LabelMode::Ternary) == 0);
  CHECK(classify_sample(1000.0, LabelMode::Ternary) == 1);
  CHECK(classify_sample(1000.001, LabelMode::Ternary) == 2);
}

TEST_CASE("single sample labels every water cell") {
  PatchStack p = uniform_patch(8, landcover::kOpenWater);
  RasterGrid& lc = p.channels[0].grid;
  lc.at(0, 0) = landcover::kDeciduousForest;
  lc.at(3, 5) = landcover::kDevelopedHigh;
  const SamplePoint s[] = {make_sample("A", lc.cell_center(4, 4), 1)};
  const RasterGrid m = expand_ground_truth(p, s);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const bool water = landcover::is_water(static_cast<int>(lc.at(r, c)));
      CHECK(m.at(r, c) == (water ? 1.0 : 2.0));
    }
  }
}

TEST_CASE("patch without water expands to non-water") {
  PatchStack p = uniform_patch(6, landcover::kGrassland);
  const SamplePoint s[] = {make_sample("A", p.channels[0].grid.cell_center(2, 2), 0)};
  const RasterGrid m = expand_ground_truth(p, s);
  for (double v : m.values()) CHECK(v == 2.0);
  CHECK(expand_ground_truth(p, s, LabelMode::Ternary).values()[0] == 3.0);
  CHECK_THROWS_AS(expand_ground_truth(p, std::span<const SamplePoint>{}), ValidationError);
}

TEST_CASE("multi-sample expansion matches nearest-sample oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const PatchStack p = testing::random_patch(rng, 24);
    const auto samples = testing::random_samples(rng, p, 4);
    const RasterGrid& lc = p.require_role(ChannelRole::LandCover);
    const RasterGrid m = expand_ground_truth(p, samples);
    for (int r = 0; r < 24; ++r) {
      for (int c = 0; c < 24; ++c) {
        if (!landcover::is_water(static_cast<int>(lc.at(r, c)))) {
          REQUIRE(m.at(r, c) == 2.0);
          continue;
        }
        const Coord here = lc.cell_center(r, c);
        double best = 1e300;
        int label = -1;
        for (const auto& s : samples) {
          const GridIndex ix = *lc.locate(s.location);
          const Coord sc = lc.cell_center(ix);
          const double d = std::hypot(sc.easting - here.easting, sc.northing - here.northing);
          if (d < best) {
            best = d;
            label = s.label;
          }
        }
        REQUIRE(m.at(r, c) == label);
      }
    }
  }
}

TEST_CASE("discharger component closed forms") {
  PatchStack p = uniform_patch(4, landcover::kOpenWater, 0.0);
  CHECK(p_dischargers(p, {1, 1}, 1, 1000.0) == 1.0);
  CHECK(p_dischargers(p, {1, 1}, 0, 1000.0) == 0.0);
  p.channels[2].grid.at(1, 1) = 1000.0;
  CHECK(p_dischargers(p, {1, 1}, 1, 1000.0) == doctest::Approx(0.367879).epsilon(1e-6));
  // The nearest of several distance channels wins.
  p.add("dist_1", ChannelRole::Distance, RasterGrid(4, 4, kCell, {0.0, 4 * kCell}, 500.0));
  CHECK(p_dischargers(p, {1, 1}, 1, 1000.0) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("land-cover component counts the neighborhood") {
  PatchStack p = uniform_patch(3, landcover::kDevelopedHigh);
  CHECK(p_landcover(p, {1, 1}, 1, 1) == 1.0);
  PatchStack forest = uniform_patch(3, landcover::kDeciduousForest);
  CHECK(p_landcover(forest, {1, 1}, 0, 1) == 1.0);
  RasterGrid& lc = p.channels[0].grid;
  const int codes[9] = {21, 22, 23, 41, 41, 42, 43, 11, 11};
  for (int i = 0; i < 9; ++i) lc.values()[i] = codes[i];
  CHECK(p_landcover(p, {1, 1}, 1, 1) == doctest::Approx(3.0 / 9.0));
  CHECK(p_landcover(p, {1, 1}, 0, 1) == doctest::Approx(4.0 / 9.0));
  // Corner windows are clipped at the border: 2x2 window of codes 21,22,41,41.
  CHECK(p_landcover(p, {0, 0}, 1, 1) == doctest::Approx(0.5));
}

TEST_CASE("sample-distance component decays monotonically") {
  PatchStack p = uniform_patch(40, landcover::kOpenWater);
  const RasterGrid& lc = p.channels[0].grid;
  const SamplePoint s[] = {make_sample("A", lc.cell_center(0, 0), 1)};
  CHECK(p_sample_dist(p, {0, 0}, s, 500.0) == 1.0);
  // 500 m is not a whole number of cells; 10 cells east is 300 m.
  CHECK(p_sample_dist(p, {0, 10}, s, 300.0) == doctest::Approx(std::exp(-1.0)));
  double prev = 2.0;
  for (int c = 0; c < 40; ++c) {
    const double v = p_sample_dist(p, {0, c}, s, 500.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 0.1);
}

TEST_CASE("downstream component follows traces") {
  // East-flowing rows: a sample at column 2 covers columns 3.. of its row.
  PatchStack p = uniform_patch(8, landcover::kOpenWater);
  const RasterGrid& lc = p.channels[0].grid;
  const RasterGrid& dirs = p.channels[1].grid;
  const SamplePoint pos[] = {make_sample("A", lc.cell_center(3, 2), 1)};
  CHECK(p_downstream(p, {3, 6}, 1, pos, dirs) == 1.0);
  CHECK(p_downstream(p, {3, 6}, 0, pos, dirs) == 0.0);
  CHECK(p_downstream(p, {3, 1}, 1, pos, dirs) == 0.5);
  CHECK(p_downstream(p, {4, 6}, 1, pos, dirs) == 0.5);

  const SamplePoint both[] = {make_sample("A", lc.cell_center(3, 2), 1), make_sample("B", lc.cell_center(3, 4), 0)};
  CHECK(p_downstream(p, {3, 6}, 1, both, dirs) == 1.0);
  CHECK(p_downstream(p, {3, 6}, 0, both, dirs) == 1.0);
  CHECK(p_downstream(p, {3, 3}, 0, both, dirs) == 0.0);
}

TEST_CASE("trace membership matches an enumeration oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const PatchStack p = testing::random_patch(rng, 16);
    const auto samples = testing::random_samples(rng, p, 5);
    const RasterGrid& dirs = p.require_role(ChannelRole::FlowDir);
    const RasterGrid& lc = p.require_role(ChannelRole::LandCover);
    const auto ev = downstream_evidence(dirs, samples);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        bool on_pos = false;
        bool on_neg = false;
        for (const auto& s : samples) {
          // The trace starts below the sample cell.
          auto cur = hydro::downstream_of(dirs, *lc.locate(s.location));
          for (int guard = 0; cur && guard < 256; ++guard) {
            if (*cur == GridIndex{r, c}) (s.label ? on_pos : on_neg) = true;
            cur = hydro::downstream_of(dirs, *cur);
          }
        }
        for (int label = 0; label < 2; ++label) {
          const bool same = label ? on_pos : on_neg;
          const bool opp = label ? on_neg : on_pos;
          const double want = same ? 1.0 : opp ? 0.0 : 0.5;
          REQUIRE(p_downstream(ev, {r, c}, label) == want);
        }
      }
    }
  }
}

TEST_CASE("noise weights validation") {
  CHECK_NOTHROW(NoiseWeights{}.validate());
  CHECK_NOTHROW((NoiseWeights{0.25, 0.25, 0.25, 0.25}.validate()));
  CHECK_THROWS_AS((NoiseWeights{0.4, 0.2, 0.1, 0.2}.validate()), ValidationError);
  CHECK_THROWS_AS((NoiseWeights{0.6, -0.1, 0.2, 0.3}.validate()), ValidationError);
}

TEST_CASE("combination arithmetic") {
  const NoiseWeights w{};
  CHECK(combine(w, 1, 1, 1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(combine(w, 1, 0, 1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  const NoiseWeights skew{0.1, 0.2, 0.3, 0.4};
  CHECK(combine(skew, 1, 1, 1, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("MDL multiplier") {
  SamplePoint s = make_sample("A", {0, 0}, 0);
  CHECK(mdl_multiplier(s) == 1.0);
  s.compounds = {compound(0.01, 0.056, 0.2)};
  CHECK(mdl_multiplier(s) == doctest::Approx(0.28).epsilon(1e-12));
  s.compounds.push_back(compound(0.0, 1.0, 10.0));
  CHECK(mdl_multiplier(s) == doctest::Approx(0.1).epsilon(1e-12));
  // A detected compound never down-weights.
  s.compounds = {compound(9.0, 4.0, 8.0)};
  CHECK(mdl_multiplier(s) == 1.0);
}

TEST_CASE("noise mask overrides and ranges") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const PatchStack p = testing::random_patch(rng, 20);
    auto samples = testing::random_samples(rng, p, 3);
    const RasterGrid& lc = p.require_role(ChannelRole::LandCover);
    const RasterGrid labels = expand_ground_truth(p, samples);
    const RasterGrid m = noise_mask(p, labels, samples, NoiseWeights{});
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 20; ++c) {
        const double v = m.at(r, c);
        if (landcover::is_water(static_cast<int>(lc.at(r, c)))) {
          REQUIRE(v >= 0.0);
          REQUIRE(v <= 1.0);
        } else {
          REQUIRE(m.is_nodata(v));
        }
      }
    }
    for (const auto& s : samples) {
      if (s.label == 1) REQUIRE(m.at(*lc.locate(s.location)) == 1.0);
    }
  }
}

TEST_CASE("negative sample cell takes the MDL multiplier") {
  PatchStack p = uniform_patch(5, landcover::kOpenWater, 0.0);
  const RasterGrid& lc = p.channels[0].grid;
  SamplePoint s = make_sample("A", lc.cell_center(2, 2), 0);
  const SamplePoint plain[] = {s};
  const RasterGrid labels = expand_ground_truth(p, plain);
  const double base = noise_mask(p, labels, plain, NoiseWeights{}).at(2, 2);
  s.compounds = {compound(0.01, 0.056, 0.2)};
  const SamplePoint weak[] = {s};
  CHECK(noise_mask(p, labels, weak, NoiseWeights{}).at(2, 2) == doctest::Approx(0.28 * base).epsilon(1e-12));
  CHECK_THROWS_AS(noise_mask(p, labels, plain, NoiseWeights{0.5, 0.5, 0.5, 0.5}), ValidationError);
}

TEST_CASE("samples CSV round trip") {
  std::vector<SamplePoint> s = {make_sample("A", {10.5, 20.25}, 1), make_sample("B", {30.0, 40.0}, 0)};
  s[1].compounds.push_back(compound(0.5, 10.0, 0.1));
  s[1].compounds.back().name = "PFHxS";
  const auto back = parse_samples_csv(format_samples_csv(s));
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "A");
  CHECK(back[0].location == s[0].location);
  CHECK(back[0].label == 1);
  REQUIRE(back[1].compounds.size() == 2);
  CHECK(back[1].compounds[1].name == "PFHxS");
  CHECK(back[1].compounds[1].mdl == 0.1);
  CHECK_THROWS(parse_samples_csv("id,easting\nA,1\n"));
}
