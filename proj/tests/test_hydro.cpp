#include <doctest.h>

#include <cmath>

#include "focus/error.hpp"
#include "focus/hydro.hpp"
#include "focus/rng.hpp"

using namespace focus;

namespace {

// Code, row offset, column offset in ascending code order.
constexpr int kOracleSteps[8][3] = {{1, 0, 1},   {2, 1, 1},   {4, 1, 0},  {8, 1, -1},
                                    {16, 0, -1}, {32, -1, -1}, {64, -1, 0}, {128, -1, 1}};

int oracle_direction(const RasterGrid& dem, int r, int c) {
  double best = 0.0;
  int code = 0;
  for (const auto& s : kOracleSteps) {
    const int rr = r + s[1], cc = c + s[2];
    if (rr < 0 || cc < 0 || rr >= dem.height() || cc >= dem.width()) continue;
    const double dist = (s[1] != 0 && s[2] != 0) ? std::sqrt(2.0) : 1.0;
    const double slope = (dem.at(r, c) - dem.at(rr, cc)) / dist;
    if (slope > best) {
      best = slope;
      code = s[0];
    }
  }
  return code;
}

RasterGrid oracle_accumulation(const RasterGrid& dirs) {
  RasterGrid acc(dirs.width(), dirs.height(), dirs.cell_size(), dirs.origin());
  for (int r = 0; r < dirs.height(); ++r) {
    for (int c = 0; c < dirs.width(); ++c) {
      int rr = r, cc = c;
      for (;;) {
        const int code = static_cast<int>(dirs.at(rr, cc));
        int k = 0;
        while (k < 8 && kOracleSteps[k][0] != code) ++k;
        if (k == 8) break;
        rr += kOracleSteps[k][1];
        cc += kOracleSteps[k][2];
        if (rr < 0 || cc < 0 || rr >= dirs.height() || cc >= dirs.width()) break;
        acc.at(rr, cc) += 1.0;
      }
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("D8 on a central pit") {
  RasterGrid dem(3, 3, 10.0, {0, 0}, 5.0);
  dem.at(1, 1) = 1.0;
  const auto d = hydro::d8_flow_direction(dem);
  CHECK(d.at(1, 1) == 0.0);
  CHECK(d.at(0, 0) == 2.0);
  CHECK(d.at(0, 1) == 4.0);
  CHECK(d.at(0, 2) == 8.0);
  CHECK(d.at(1, 0) == 1.0);
  CHECK(d.at(1, 2) == 16.0);
  CHECK(d.at(2, 0) == 128.0);
  CHECK(d.at(2, 1) == 64.0);
  CHECK(d.at(2, 2) == 32.0);
  const auto a = hydro::flow_accumulation(d);
  CHECK(a.at(1, 1) == 8.0);
  CHECK(a.at(0, 0) == 0.0);
}

TEST_CASE("D8 ties go to the smallest code and flats are sinks") {
  RasterGrid flat(3, 3, 1.0, {0, 0}, 2.0);
  const RasterGrid dirs = hydro::d8_flow_direction(flat);
  for (double v : dirs.values()) CHECK(v == 0.0);
  RasterGrid dem(3, 3, 1.0, {0, 0}, 5.0);
  dem.at(1, 2) = 4.0;  // east, drop 1
  dem.at(2, 1) = 4.0;  // south, drop 1
  CHECK(hydro::d8_flow_direction(dem).at(1, 1) == 1.0);
}

TEST_CASE("D8 and accumulation match oracles on random DEMs") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    RasterGrid dem(32, 32, 30.0, {0, 0});
    for (double& v : dem.values()) v = std::floor(rng.uniform(0.0, 20.0));
    const auto dirs = hydro::d8_flow_direction(dem);
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) CHECK(dirs.at(r, c) == oracle_direction(dem, r, c));
    }
    CHECK(hydro::flow_accumulation(dirs) == oracle_accumulation(dirs));
  }
}

TEST_CASE("cycles are reported") {
  RasterGrid dirs(2, 1, 1.0, {0, 0});
  dirs.at(0, 0) = hydro::kEast;
  dirs.at(0, 1) = hydro::kWest;
  CHECK_THROWS_AS(hydro::flow_accumulation(dirs), CycleError);
  CHECK_THROWS_AS(hydro::downstream_path(dirs, {0, 0}), CycleError);
}

TEST_CASE("downstream path, validation and clipping") {
  RasterGrid dirs(4, 1, 1.0, {0, 0}, hydro::kEast);
  const auto path = hydro::downstream_path(dirs, {0, 1});
  REQUIRE(path.size() == 2);
  CHECK(path[0] == GridIndex{0, 2});
  CHECK(path[1] == GridIndex{0, 3});
  CHECK_THROWS_AS(hydro::validate_flow_directions(dirs), ValidationError);
  const auto clipped = hydro::clip_outward_directions(dirs);
  CHECK(clipped.at(0, 3) == 0.0);
  CHECK(clipped.at(0, 2) == hydro::kEast);
  CHECK_NOTHROW(hydro::validate_flow_directions(clipped));
  RasterGrid bad(1, 1, 1.0, {0, 0}, 3.0);
  CHECK_THROWS_AS(hydro::validate_flow_directions(bad), ValidationError);
  CHECK(hydro::mirror_code(hydro::kNorthEast) == hydro::kNorthWest);
  CHECK(hydro::mirror_code(hydro::kSouth) == hydro::kSouth);
}
