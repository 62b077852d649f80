// Acceptance driver: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "focus/cli.hpp"
#include "focus/error.hpp"
#include "focus/eval.hpp"
#include "focus/hydro.hpp"
#include "focus/kriging.hpp"
#include "focus/labeling.hpp"
#include "focus/loss.hpp"
#include "focus/pipeline.hpp"
#include "focus/raster.hpp"
#include "focus/rng.hpp"
#include "focus/synth.hpp"
#include "focus/transport.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace focus;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Trained in criterion 7, reused by criterion 9.
std::optional<model::ModelState> g_trained;

// ---------------------------------------------------------------------------
// 1. Distance transform

Outcome distance_transform_oracle() {
  Rng rng(101);
  double worst = 0.0;
  double elapsed = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    RasterGrid src(64, 64, testing::kCell, {0, 64 * testing::kCell}, 0.0);
    const int n = 1 + static_cast<int>(rng.below(12));
    for (int k = 0; k < n; ++k) src.values()[rng.below(src.size())] = 1.0;
    const auto t0 = Clock::now();
    const DistanceResult d = distance_transform(src);
    elapsed += seconds_since(t0);
    std::vector<GridIndex> sources;
    for (int r = 0; r < 64; ++r) {
      for (int c = 0; c < 64; ++c) {
        if (src.at(r, c) == 1.0) sources.push_back({r, c});
      }
    }
    for (int r = 0; r < 64; ++r) {
      for (int c = 0; c < 64; ++c) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : sources) best = std::min(best, std::hypot(r - s.row, c - s.col) * testing::kCell);
        worst = std::max(worst, testing::relative_error(d.grid.at(r, c), best, 1e-300));
      }
    }
  }
  return {worst < 1e-9 && elapsed < 1.0, fmt::format("max rel err {:.2e}, EDT time {:.4f} s", worst, elapsed)};
}

// ---------------------------------------------------------------------------
// 2. D8 and accumulation

constexpr int kSteps[8][3] = {{1, 0, 1},    {2, 1, 1},    {4, 1, 0},   {8, 1, -1},
                              {16, 0, -1}, {32, -1, -1}, {64, -1, 0}, {128, -1, 1}};

int steepest_drop(const RasterGrid& dem, int r, int c) {
  double best = 0.0;
  int code = 0;
  for (const auto& s : kSteps) {
    const int rr = r + s[1], cc = c + s[2];
    if (!dem.contains(rr, cc)) continue;
    const double slope = (dem.at(r, c) - dem.at(rr, cc)) / ((s[1] && s[2]) ? std::sqrt(2.0) : 1.0);
    if (slope > best) {
      best = slope;
      code = s[0];
    }
  }
  return code;
}

/// Upstream count of each cell: every cell walks its downstream path and
/// credits each cell it passes through.
RasterGrid upstream_reachability(const RasterGrid& dirs) {
  RasterGrid acc(dirs.width(), dirs.height(), dirs.cell_size(), dirs.origin(), 0.0);
  for (int r = 0; r < dirs.height(); ++r) {
    for (int c = 0; c < dirs.width(); ++c) {
      int rr = r, cc = c;
      for (std::size_t hop = 0; hop < dirs.size(); ++hop) {
        const int code = static_cast<int>(dirs.at(rr, cc));
        const auto* s = std::find_if(std::begin(kSteps), std::end(kSteps), [&](const auto& k) { return k[0] == code; });
        if (s == std::end(kSteps) || !dirs.contains(rr + (*s)[1], cc + (*s)[2])) break;
        rr += (*s)[1];
        cc += (*s)[2];
        acc.at(rr, cc) += 1.0;
      }
    }
  }
  return acc;
}

Outcome d8_oracle() {
  Rng rng(202);
  int dir_mismatch = 0, acc_mismatch = 0;
  for (int trial = 0; trial < 50; ++trial) {
    RasterGrid dem(32, 32, testing::kCell, {0, 0});
    // Half the DEMs are integer valued so ties and flats occur.
    const bool ties = trial % 2 == 0;
    for (double& v : dem.values()) v = ties ? std::floor(rng.uniform(0.0, 12.0)) : rng.uniform(0.0, 100.0);
    const RasterGrid dirs = hydro::d8_flow_direction(dem);
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) dir_mismatch += dirs.at(r, c) != steepest_drop(dem, r, c);
    }
    const RasterGrid acc = hydro::flow_accumulation(dirs);
    const RasterGrid oracle = upstream_reachability(dirs);
    for (std::size_t i = 0; i < acc.size(); ++i) acc_mismatch += acc.values()[i] != oracle.values()[i];
  }
  return {dir_mismatch == 0 && acc_mismatch == 0,
          fmt::format("direction mismatches {}, accumulation mismatches {}", dir_mismatch, acc_mismatch)};
}

// ---------------------------------------------------------------------------
// 3. FOCUS loss gradient

std::vector<double> softmax_rows(const std::vector<double>& z, int k) {
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < z.size(); i += k) {
    double mx = z[i];
    for (int j = 1; j < k; ++j) mx = std::max(mx, z[i + j]);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += p[i + j] = std::exp(z[i + j] - mx);
    for (int j = 0; j < k; ++j) p[i + j] /= s;
  }
  return p;
}

Outcome focus_gradient() {
  Rng rng(303);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(2));
    const int cells = 8 + static_cast<int>(rng.below(17));
    loss::MulticlassBatch b;
    b.classes = k;
    std::vector<double> z(static_cast<std::size_t>(cells) * k);
    for (double& v : z) v = rng.uniform(-3.0, 3.0);
    b.probs = softmax_rows(z, k);
    for (int i = 0; i < cells; ++i) {
      b.labels.push_back(static_cast<int>(rng.below(k)));
      b.noise.push_back(rng.uniform());
      b.valid.push_back(rng.uniform() < 0.8 ? 1 : 0);
    }
    b.valid[0] = 1;
    for (int j = 0; j < k; ++j) b.class_weights.push_back(rng.uniform(0.5, 2.0));
    const double gamma = rng.uniform(0.0, 3.0);
    const auto g = loss::focus_loss_grad(b, gamma);
    // Max-norm relative error over the batch: components far below the
    // largest one sit under the difference quotient's rounding floor.
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      auto zu = z, zd = z;
      zu[i] += h;
      zd[i] -= h;
      loss::MulticlassBatch up = b, dn = b;
      up.probs = softmax_rows(zu, k);
      dn.probs = softmax_rows(zd, k);
      const double fd = (loss::focus_loss(up, gamma) - loss::focus_loss(dn, gamma)) / (2 * h);
      diff = std::max(diff, std::abs(g[i] - fd));
      scale = std::max({scale, std::abs(g[i]), std::abs(fd)});
    }
    worst = std::max(worst, diff / scale);
  }
  double ce_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    loss::LossBatch b;
    double ce = 0.0;
    for (int i = 0; i < 64; ++i) {
      const double p = rng.uniform(0.01, 0.99);
      const int y = static_cast<int>(rng.below(2));
      b.probs.push_back(p);
      b.labels.push_back(y);
      b.noise.push_back(1.0);
      b.valid.push_back(1);
      ce += y ? -std::log(p) : -std::log(1.0 - p);
    }
    ce_gap = std::max(ce_gap, std::abs(loss::focus_loss(b, 0.0) - ce / 64.0));
  }
  return {worst < 1e-4 && ce_gap < 1e-12,
          fmt::format("max gradient rel err {:.2e}, |loss - mean CE| {:.2e}", worst, ce_gap)};
}

// ---------------------------------------------------------------------------
// 4. Noise mask invariants

Outcome noise_mask_invariants() {
  Rng rng(404);
  long range_bad = 0, sample_bad = 0, duality_bad = 0;
  const labeling::NoiseParams params;
  for (int trial = 0; trial < 1000; ++trial) {
    const PatchStack p = testing::random_patch(rng, 16, rng.uniform(0.2, 0.8));
    const auto samples = testing::random_samples(rng, p, 1 + static_cast<int>(rng.below(4)));
    if (samples.empty()) continue;
    const RasterGrid& lc = p.require_role(ChannelRole::LandCover);
    const RasterGrid labels = labeling::expand_ground_truth(p, samples);
    const RasterGrid m = labeling::noise_mask(p, labels, samples, labeling::NoiseWeights{}, params);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const double v = m.at(r, c);
        if (landcover::is_water(static_cast<int>(lc.at(r, c)))) {
          range_bad += !(v >= 0.0 && v <= 1.0);
        } else {
          range_bad += !m.is_nodata(v);
        }
        const double p1 = labeling::p_dischargers(p, {r, c}, 1, params.discharger_lambda);
        const double p0 = labeling::p_dischargers(p, {r, c}, 0, params.discharger_lambda);
        duality_bad += p0 != 1.0 - p1;
      }
    }
    for (const auto& s : samples) {
      if (s.label == 1) sample_bad += m.at(*lc.locate(s.location)) != 1.0;
    }
  }
  bool accepted = true, rejected = false;
  try {
    labeling::NoiseWeights{0.4, 0.2, 0.1, 0.3}.validate();
  } catch (const ValidationError&) {
    accepted = false;
  }
  try {
    labeling::NoiseWeights{0.4, 0.2, 0.1, 0.4}.validate();
  } catch (const ValidationError&) {
    rejected = true;
  }
  return {range_bad == 0 && sample_bad == 0 && duality_bad == 0 && accepted && rejected,
          fmt::format("range {} / sample cells {} / duality {} violations; default weights {}, sum 1.1 {}", range_bad,
                      sample_bad, duality_bad, accepted ? "accepted" : "rejected",
                      rejected ? "rejected" : "accepted")};
}

// ---------------------------------------------------------------------------
// 5. Kriging

Outcome kriging_checks() {
  Rng rng(505);
  const baselines::VariogramModel m{0.0, 1.0, 400.0};
  std::vector<Coord> pts;
  std::vector<double> vals;
  for (int i = 0; i < 40; ++i) {
    pts.push_back({rng.uniform(0, 1500), rng.uniform(0, 1500)});
    vals.push_back(rng.uniform());
  }
  const baselines::OrdinaryKriging ok(pts, vals, m);
  double interp = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) interp = std::max(interp, std::abs(ok.predict(pts[i]).estimate - vals[i]));
  double wsum = 0.0;
  for (int q = 0; q < 100; ++q) {
    const auto est = ok.predict({rng.uniform(0, 1500), rng.uniform(0, 1500)});
    wsum = std::max(wsum, std::abs(std::accumulate(est.weights.begin(), est.weights.end(), 0.0) - 1.0));
  }
  const baselines::VariogramModel truth{0.2, 1.7, 420.0};
  std::vector<baselines::VariogramBin> bins;
  for (int i = 1; i <= 30; ++i) bins.push_back({25.0 * i, truth.gamma(25.0 * i), static_cast<std::size_t>(10 + i)});
  const auto fit = baselines::fit_spherical(bins);
  const double recovery = std::max({std::abs(fit.nugget - truth.nugget), std::abs(fit.sill - truth.sill),
                                    std::abs(fit.range - truth.range)});
  // Two points valued 0 and 1: the midpoint estimates 0.5 and classifies as 1.
  const baselines::OrdinaryKriging two({{0, 0}, {100, 0}}, {0.0, 1.0}, m);
  const bool threshold = pipeline::Settings{}.krige_threshold == 0.5 && two.classify({50, 0}) == 1 &&
                         two.classify({40, 0}) == 0;
  return {interp < 1e-8 && wsum < 1e-10 && recovery < 1e-6 && threshold,
          fmt::format("interp err {:.2e}, weight-sum err {:.2e}, variogram err {:.2e}, threshold 0.5 {}", interp,
                      wsum, recovery, threshold ? "ok" : "wrong")};
}

// ---------------------------------------------------------------------------
// 6. Transport ledger

Outcome transport_ledger() {
  Rng rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int size = 24 + static_cast<int>(rng.below(25));
    const PatchStack p = testing::random_patch(rng, size);
    const RasterGrid& lc = p.require_role(ChannelRole::LandCover);
    RasterGrid dis(size, size, lc.cell_size(), lc.origin(), 0.0);
    for (int k = 0; k < 4; ++k) dis.values()[rng.below(dis.size())] = 1.0;
    const auto res = baselines::transport_simulate(p, dis, baselines::HruTable::defaults(), {});
    if (res.ledger.empty()) return {false, "empty ledger"};
    for (const auto& l : res.ledger) worst = std::max(worst, std::abs(l.total() - res.initial_mass) / res.initial_mass);
  }

  // Bowl draining to a central pit, no infiltration.
  const auto g = [](double fill) { return RasterGrid(9, 9, testing::kCell, {0, 9 * testing::kCell}, fill); };
  RasterGrid dem = g(0.0);
  for (int r = 0; r < 9; ++r) {
    for (int c = 0; c < 9; ++c) dem.at(r, c) = std::hypot(r - 4, c - 4);
  }
  const RasterGrid dirs = hydro::d8_flow_direction(dem);
  const RasterGrid lc = g(landcover::kGrassland);
  RasterGrid dis = g(0.0);
  dis.at(0, 0) = 1.0;
  baselines::HruTable closed;
  for (auto land : {baselines::HruLand::Water, baselines::HruLand::Developed, baselines::HruLand::Cropland,
                    baselines::HruLand::Natural}) {
    for (int band = 0; band < 3; ++band) closed.set({land, 0, band}, {0.0, 0.5});
  }
  const baselines::TransportParams params;
  const RasterGrid init = baselines::initial_concentration(lc, dis, params);
  const auto res = baselines::transport_simulate(init, lc, g(0.0), g(1.0), dirs, hydro::flow_accumulation(dirs),
                                                 closed, params);
  double closed_gap = 0.0;
  for (const auto& l : res.ledger) {
    closed_gap = std::max(closed_gap, std::abs(l.in_cells - res.initial_mass) / res.initial_mass + l.exited +
                                          l.infiltrated);
  }
  const bool seeded = init.at(0, 0) == 100.0;
  return {worst <= 1e-9 && closed_gap <= 1e-9 && seeded,
          fmt::format("max ledger rel err {:.2e}, closed-basin drift {:.2e}, discharger start {}", worst, closed_gap,
                      init.at(0, 0))};
}

// ---------------------------------------------------------------------------
// 7. Loss ablation

struct Corpus {
  synth::World world;
  std::vector<labeling::SamplePoint> samples;
  synth::SplitResult split;
  std::vector<pipeline::PatchRecord> train, test;
  std::vector<labeling::SamplePoint> test_samples;
};

pipeline::Settings ablation_settings() {
  pipeline::Settings s;
  s.world.seed = 42;
  s.sample.n = 250;
  // Balanced labels: with the default 0.895 share the 50 test points hold a
  // handful of negatives and macro F swings on single predictions.
  s.sample.positive_fraction = 0.5;
  s.patch_size = 32;
  s.widths = {8, 16, 16, 32};
  s.train.epochs = 20;
  return s;
}

Corpus build_corpus(const pipeline::Settings& s) {
  Corpus c;
  c.world = synth::generate_world(s.world);
  synth::SampleConfig sc = s.sample;
  sc.margin = s.sample_margin();
  c.samples = synth::sample_points(c.world, sc);
  const double fractions[] = {s.train_fraction, 1.0 - s.train_fraction};
  c.split = synth::disjoint_split(c.samples, c.world.landcover, s.patch_size, fractions);
  for (auto& r : pipeline::make_patch_records(c.world, c.samples, c.split.assignment, s)) {
    (r.split == pipeline::kTrainSplit ? c.train : c.test).push_back(std::move(r));
  }
  c.test_samples = pipeline::samples_of(c.samples, c.split.assignment, pipeline::kTestSplit);
  return c;
}

Outcome loss_ablation() {
  const auto t0 = Clock::now();
  const pipeline::Settings s = ablation_settings();
  const Corpus c = build_corpus(s);
  double focus_sum = 0.0, focal_sum = 0.0;
  int wins = 0;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto focus = pipeline::train_and_evaluate(c.train, c.test, c.test_samples, s, model::LossMode::Focus, seed);
    const auto focal = pipeline::train_and_evaluate(c.train, c.test, c.test_samples, s, model::LossMode::FocalOnly, seed);
    focus_sum += focus.report.macro.fscore;
    focal_sum += focal.report.macro.fscore;
    wins += focus.report.macro.fscore >= focal.report.macro.fscore;
    per_seed += fmt::format(" {:.3f}/{:.3f}", focus.report.macro.fscore, focal.report.macro.fscore);
    if (!g_trained) g_trained = std::move(focus.state);
  }
  const double gap = (focus_sum - focal_sum) / 3.0;
  const double elapsed = seconds_since(t0);
  return {gap >= 0.0 && elapsed < 1800.0,
          fmt::format("{} train / {} test patches; macro F focus/focal per seed:{}; mean gap {:+.4f}, {} of 3 seeds, "
                      "{:.0f} s",
                      c.train.size(), c.test.size(), per_seed, gap, wins, elapsed)};
}

// ---------------------------------------------------------------------------
// 8. Wilcoxon

Outcome wilcoxon_table() {
  const double focus[] = {0.8, 0.9, 0.7, 0.85, 0.75};
  const double focal[] = {0.7, 0.8, 0.5, 0.80, 0.70};
  const auto r = eval::wilcoxon_signed_rank(focus, focal);
  return {r.w == 0.0 && r.p_one_sided == 0.03125 && r.p_two_sided == 0.0625 && r.exact,
          fmt::format("W = {}, one-sided p = {}, two-sided p = {}", r.w, r.p_one_sided, r.p_two_sided)};
}

// ---------------------------------------------------------------------------
// 9. Consistency

Outcome consistency() {
  pipeline::Settings s = ablation_settings();
  const synth::World world = synth::generate_world(s.world);
  if (!g_trained) {
    const Corpus c = build_corpus(s);
    g_trained = pipeline::train_and_evaluate(c.train, c.test, c.test_samples, s, model::LossMode::Focus, 1).state;
  }
  const auto trials = pipeline::consistency_trials(world, &*g_trained, s, 909);
  std::map<int, double> model_mean;
  double rule_min = 1.0;
  for (const auto& t : trials) {
    model_mean[t.overlap] += t.model_water / s.consistency_trials;
    rule_min = std::min(rule_min, t.rule);
  }
  bool pass = rule_min == 1.0 && model_mean.size() == 2;
  std::string detail = fmt::format("rule agreement min {}", rule_min);
  for (const auto& [overlap, mean] : model_mean) {
    pass = pass && mean >= 0.9;
    detail += fmt::format(", model {}px {:.4f}", overlap, mean);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 10. ECE

Outcome calibration() {
  const double conf_a[] = {0.9, 0.9, 0.9, 0.9, 0.9, 0.6, 0.6, 0.6, 0.6, 0.6};
  const std::uint8_t ok_a[] = {1, 1, 1, 1, 1, 1, 1, 0, 0, 0};
  const double two_bin = eval::ece(conf_a, ok_a);
  // Confidences on an even grid, outcomes from a low-discrepancy sequence:
  // each prediction is right with probability equal to its confidence.
  std::vector<double> conf;
  std::vector<std::uint8_t> ok;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 1000; ++i) {
    const double c = (i + 0.5) / 1000.0;
    conf.push_back(c);
    ok.push_back(std::fmod(i * phi, 1.0) < c ? 1 : 0);
  }
  const double calibrated = eval::ece(conf, ok);
  return {std::abs(two_bin - 0.15) < 1e-12 && calibrated < 0.02,
          fmt::format("two-bin ECE {:.12f}, calibrated ECE {:.4f}", two_bin, calibrated)};
}

// ---------------------------------------------------------------------------
// 11. Disjoint split

Outcome disjoint_split() {
  Rng rng(1111);
  const RasterGrid ref(1024, 1024, testing::kCell, {0, 1024 * testing::kCell});
  long overlaps = 0;
  double worst_fraction = 0.0;
  for (int layout = 0; layout < 20; ++layout) {
    std::vector<labeling::SamplePoint> s;
    for (int i = 0; i < 200; ++i) {
      const int r = static_cast<int>(rng.below(1024));
      const int c = static_cast<int>(rng.below(1024));
      s.push_back(testing::make_sample("S" + std::to_string(i), ref.cell_center(r, c), 1));
    }
    const double fr[] = {0.8, 0.2};
    const auto split = synth::disjoint_split(s, ref, 64, fr);
    long train = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      train += split.assignment[i] == pipeline::kTrainSplit;
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        if (split.assignment[i] == split.assignment[j]) continue;
        overlaps += synth::windows_overlap(*ref.locate(s[i].location), *ref.locate(s[j].location), 64);
      }
    }
    worst_fraction = std::max(worst_fraction, std::abs(static_cast<double>(train) / s.size() - 0.8));
  }
  return {overlaps == 0 && worst_fraction <= 0.05 + 1e-12,
          fmt::format("cross-split overlaps {}, worst train-fraction deviation {:.1f} pp", overlaps,
                      100 * worst_fraction)};
}

// ---------------------------------------------------------------------------
// CLI helpers for 12 and 13

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Relative path -> content for every file under `root`; manifests lose
/// their timestamp and have the root replaced by a placeholder.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    std::string text = slurp(e.path());
    if (e.path().filename() == "manifest.json") {
      auto j = nlohmann::json::parse(text);
      j.erase("timestamp");
      text = j.dump();
      for (std::size_t at; (at = text.find(root.string())) != std::string::npos;) text.replace(at, root.string().size(), "$ROOT");
    }
    out[rel] = std::move(text);
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("focus_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// 12. Grid search

Outcome grid_search() {
  const auto grid = eval::default_weight_grid();
  bool distinct = grid.size() == 24;
  bool has_default = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    has_default = has_default || grid[i] == labeling::NoiseWeights{0.4, 0.2, 0.1, 0.3};
    for (std::size_t j = 0; j < i; ++j) distinct = distinct && !(grid[i] == grid[j]);
  }
  std::vector<std::string> tables;
  for (const char* name : {"a", "b"}) {
    const fs::path dir = scratch(std::string("grid_") + name);
    std::ofstream(dir / "cfg.ini") << "[world]\nextent = 512\nn_dischargers = 30\n[sample]\nn = 40\n[patch]\nsize = "
                                      "16\n[model]\nwidths = 4,4,8,8\n[train]\nepochs = 1\nbatch_size = 8\n";
    const std::string cfg = (dir / "cfg.ini").string();
    if (cli({"gen-world", "--config", cfg, "--seed", "7", "--out", dir.string()}).code != 0 ||
        cli({"sample", "--config", cfg, "--seed", "7", "--world", (dir / "world.fps").string(), "--out", dir.string()})
                .code != 0) {
      return {false, "setup failed"};
    }
    const auto r = cli({"ablate-noise-weights", "--config", cfg, "--seed", "7", "--world", (dir / "world.fps").string(),
                        "--samples", (dir / "samples.csv").string(), "--split", (dir / "split.csv").string(), "--out",
                        dir.string()});
    if (r.code != 0) return {false, "ablate-noise-weights exited " + std::to_string(r.code) + ": " + r.err};
    tables.push_back(slurp(dir / "grid_search.csv"));
    fs::remove_all(dir);
  }
  // Header plus 24 rows, F-score column nonincreasing.
  std::istringstream in(tables[0]);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  bool ranked = true;
  double prev = std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    const double f = std::stod(cells.at(5));
    ranked = ranked && f <= prev;
    prev = f;
  }
  const bool same = tables[0] == tables[1];
  return {distinct && has_default && rows == 24 && ranked && same,
          fmt::format("{} distinct configs (default present: {}), {} ranked rows, rerun identical: {}", grid.size(),
                      has_default, rows, same)};
}

// ---------------------------------------------------------------------------
// 13. End-to-end CLI smoke

Outcome cli_smoke() {
  std::vector<std::map<std::string, std::string>> snaps;
  std::string report;
  for (const char* name : {"a", "b"}) {
    const fs::path root = scratch(std::string("smoke_") + name);
    std::ofstream(root / "cfg.ini") << "[sample]\nn = 120\n[patch]\nsize = 32\n[model]\nwidths = 8,8,16,16\n"
                                       "[train]\nepochs = 2\n";
    const std::string cfg = (root / "cfg.ini").string();
    auto dir = [&](const char* sub) { return (root / sub).string(); };
    const std::vector<std::vector<std::string>> steps = {
        {"gen-world", "--out", dir("world")},
        {"sample", "--world", dir("world") + "/world.fps", "--out", dir("samples")},
        {"make-patches", "--world", dir("world") + "/world.fps", "--samples", dir("samples") + "/samples.csv",
         "--split", dir("samples") + "/split.csv", "--out", dir("patches")},
        {"train", "--patches", dir("patches") + "/patches", "--out", dir("model")},
        {"predict", "--model", dir("model") + "/model.fck", "--patches", dir("patches") + "/patches", "--split", "test",
         "--out", dir("pred")},
        {"evaluate", "--predictions", dir("pred") + "/predictions", "--samples", dir("samples") + "/samples.csv",
         "--out", dir("eval")},
    };
    for (auto args : steps) {
      args.insert(args.end(), {"--config", cfg, "--seed", "11"});
      const auto r = cli(args);
      if (r.code != 0) return {false, args.front() + " exited " + std::to_string(r.code) + ": " + r.err};
    }
    report = slurp(root / "eval" / "metrics.csv");
    snaps.push_back(snapshot(root));
    fs::remove_all(root);
  }
  const bool well_formed = report.rfind("class,accuracy,iou,fscore,precision,recall,support\n", 0) == 0 &&
                           report.find("\nmacro,") != std::string::npos;
  std::vector<std::string> differ;
  for (const auto& [rel, text] : snaps[0]) {
    auto it = snaps[1].find(rel);
    if (it == snaps[1].end() || it->second != text) differ.push_back(rel);
  }
  const bool identical = differ.empty() && snaps[0].size() == snaps[1].size();
  return {well_formed && identical,
          fmt::format("{} files, report {}, rerun {}", snaps[0].size(), well_formed ? "well formed" : "malformed",
                      identical ? "bit-identical" : "differs in " + (differ.empty() ? "file set" : differ.front()))};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional criterion numbers restrict the run.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"distance transform vs brute force", distance_transform_oracle},
      {"D8 and accumulation vs oracles", d8_oracle},
      {"FOCUS loss gradient and CE reduction", focus_gradient},
      {"noise mask invariants", noise_mask_invariants},
      {"ordinary kriging", kriging_checks},
      {"transport mass ledger", transport_ledger},
      {"FOCUS vs focal-only ablation", loss_ablation},
      {"Wilcoxon signed-rank table", wilcoxon_table},
      {"overlap consistency", consistency},
      {"expected calibration error", calibration},
      {"geographically disjoint split", disjoint_split},
      {"noise weight grid search", grid_search},
      {"end-to-end CLI smoke", cli_smoke},
  };
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i + 1)) == only.end()) continue;
    ++ran;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    fmt::print("{} {:>2} {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail,
               seconds_since(t0));
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
