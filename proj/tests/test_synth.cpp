#include <doctest.h>

#include <filesystem>

#include "focus/error.hpp"
#include "focus/hydro.hpp"
#include "focus/synth.hpp"
#include "support.hpp"

using namespace focus;
using namespace focus::synth;

namespace {

WorldSpec small_spec(std::uint64_t seed) {
  WorldSpec s;
  s.seed = seed;
  s.extent = 512;
  s.n_dischargers = 30;
  return s;
}

double water_share(const World& w) {
  std::size_t n = 0;
  for (double v : w.landcover.values()) n += landcover::is_water(static_cast<int>(v));
  return static_cast<double>(n) / static_cast<double>(w.landcover.size());
}

}  // namespace

TEST_CASE("world generation is deterministic") {
  const World a = generate_world(small_spec(7));
  const World b = generate_world(small_spec(7));
  CHECK(a == b);
  const World c = generate_world(small_spec(8));
  CHECK_FALSE(a.dem == c.dem);
  CHECK(a.dischargers.size() == 30);
  CHECK(a.distance.size() == 3);
  CHECK_NOTHROW(hydro::validate_flow_directions(a.flowdir));
}

TEST_CASE("world spec validation") {
  WorldSpec s = small_spec(1);
  s.extent = 256;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = small_spec(1);
  s.urban_fraction = 0.7;
  s.water_fraction = 0.4;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = small_spec(1);
  s.water_fraction = -0.1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("no developed land means no dischargers") {
  WorldSpec s = small_spec(3);
  s.urban_fraction = 0.0;
  const World w = generate_world(s);
  CHECK(w.dischargers.empty());
  for (double v : w.landcover.values()) CHECK_FALSE(landcover::is_developed(static_cast<int>(v)));
}

TEST_CASE("water share tracks the requested fraction") {
  WorldSpec s;
  s.seed = 42;
  const World w = generate_world(s);
  CHECK(std::abs(water_share(w) - 0.10) <= 0.02);
  // Water follows the drainage network.
  const SampleConfig sc;
  const auto samples = sample_points(w, sc);
  int pos = 0;
  for (const auto& p : samples) {
    CHECK(landcover::is_water(static_cast<int>(w.landcover.at(*w.landcover.locate(p.location)))));
    pos += p.label;
  }
  CHECK(samples.size() == 866);
  CHECK(pos == 775);
}

TEST_CASE("world files round trip") {
  const World a = generate_world(small_spec(5));
  const auto path = std::filesystem::temp_directory_path() / "focus_test_world.fps";
  write_world(a, path);
  const World b = read_world(path);
  std::filesystem::remove(path);
  CHECK(b.spec.extent == a.spec.extent);
  CHECK(b.dischargers.size() == a.dischargers.size());
  CHECK(b.discharger_industry == a.discharger_industry);
  CHECK(b.landcover == a.landcover);
  CHECK(b.flowdir == a.flowdir);
}

TEST_CASE("sampling labels and compounds agree") {
  const World w = generate_world(small_spec(9));
  SampleConfig sc;
  sc.n = 200;
  sc.margin = 20;
  const auto samples = sample_points(w, sc);
  int pos = 0;
  for (const auto& s : samples) {
    pos += s.label;
    CHECK(labeling::classify_sample(labeling::hazard_index(s.compounds), labeling::LabelMode::Binary) == s.label);
    const GridIndex ix = *w.landcover.locate(s.location);
    CHECK(ix.row >= 20);
    CHECK(ix.row < 512 - 20);
  }
  CHECK(pos == 179);
  sc.positive_fraction = 1.0;
  for (const auto& s : sample_points(w, sc)) CHECK(s.label == 1);
  sc.n = 1;
  CHECK_THROWS_AS(sample_points(w, sc), ValidationError);
}

TEST_CASE("disjoint split never overlaps") {
  Rng rng(77);
  const RasterGrid ref(512, 512, 30.0, {0, 512 * 30.0});
  for (int layout = 0; layout < 20; ++layout) {
    std::vector<labeling::SamplePoint> s;
    for (int i = 0; i < 60; ++i) {
      const int r = static_cast<int>(rng.below(512));
      const int c = static_cast<int>(rng.below(512));
      s.push_back(testing::make_sample("S" + std::to_string(i), ref.cell_center(r, c), 1));
    }
    const double fr[] = {0.8, 0.2};
    const auto split = disjoint_split(s, ref, 32, fr);
    long train = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      train += split.assignment[i] == 0;
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (split.assignment[i] == split.assignment[j]) continue;
        REQUIRE_FALSE(windows_overlap(*ref.locate(s[i].location), *ref.locate(s[j].location), 32));
      }
    }
    CHECK(std::abs(static_cast<double>(train) / 60.0 - 0.8) <= 0.05 + 1e-12);
  }
}

TEST_CASE("split edge cases") {
  const RasterGrid ref(100, 100, 30.0, {0, 3000.0});
  const double half[] = {0.5, 0.5};
  std::vector<labeling::SamplePoint> two = {testing::make_sample("A", ref.cell_center(5, 5), 1),
                                            testing::make_sample("B", ref.cell_center(90, 90), 0)};
  const auto s = disjoint_split(two, ref, 16, half);
  CHECK(s.assignment[0] != s.assignment[1]);
  two[1].location = ref.cell_center(10, 10);
  CHECK_THROWS_AS(disjoint_split(two, ref, 16, half), ValidationError);
  CHECK(windows_overlap({0, 0}, {15, 15}, 16));
  CHECK_FALSE(windows_overlap({0, 0}, {16, 0}, 16));
}
