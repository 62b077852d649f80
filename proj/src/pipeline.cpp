#include "focus/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "focus/error.hpp"
#include "focus/hydro.hpp"
#include "focus/kriging.hpp"
#include "focus/patch_io.hpp"
#include "focus/rng.hpp"

namespace focus::pipeline {
namespace {

constexpr const char* kKeys[] = {
    "world.seed",          "world.extent",          "world.cell_size",       "world.n_dischargers",
    "world.n_industries",  "world.urban_fraction",  "world.water_fraction",  "world.relief",
    "world.tilt",          "sample.n",              "sample.positive_fraction", "sample.label_noise",
    "sample.year",         "sample.seed",           "sample.train_fraction", "patch.size",
    "patch.use_dem",       "patch.label_mode",      "noise.dischargers",     "noise.landcover",
    "noise.sample_dist",   "noise.downstream",      "noise.discharger_lambda", "noise.sample_lambda",
    "noise.landcover_radius", "model.widths",       "model.seed",            "train.learning_rate",
    "train.batch_size",    "train.epochs",          "train.weight_decay",    "train.warmup_steps",
    "train.total_steps",   "train.poly_power",      "train.gamma",           "train.beta1",
    "train.beta2",         "train.eps",             "train.seed",            "pretrain.mask_ratio",
    "pretrain.block",      "pretrain.steps",        "pretrain.heldout_fraction", "rule.threshold",
    "krige.threshold",     "krige.bins",            "consistency.patch_size", "consistency.trials",
    "consistency.overlaps", "bench.runs",           "bench.points",          "grid.epochs",
};

constexpr double kDistanceNodataFill = 1e5;

int to_int(long long v, const char* key) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ValidationError(std::string("config key ") + key + " is out of range");
  }
  return static_cast<int>(v);
}

RasterGrid water_only(const RasterGrid& values, const RasterGrid& lc) {
  RasterGrid out = values;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!landcover::is_water(static_cast<int>(lc.values()[i]))) out.values()[i] = out.nodata();
  }
  return out;
}

}  // namespace

std::span<const char* const> known_keys() { return kKeys; }

Settings Settings::from_config(const Config& c, std::optional<std::uint64_t> seed) {
  const std::set<std::string> known(std::begin(kKeys), std::end(kKeys));
  for (const auto& [k, v] : c.entries()) {
    if (!known.count(k)) throw ValidationError("unknown config key '" + k + "'");
  }
  Settings s;
  auto& w = s.world;
  w.seed = static_cast<std::uint64_t>(c.get_int("world.seed", static_cast<long long>(w.seed)));
  w.extent = to_int(c.get_int("world.extent", w.extent), "world.extent");
  w.cell_size = c.get_double("world.cell_size", w.cell_size);
  w.n_dischargers = to_int(c.get_int("world.n_dischargers", w.n_dischargers), "world.n_dischargers");
  w.n_industries = to_int(c.get_int("world.n_industries", w.n_industries), "world.n_industries");
  w.urban_fraction = c.get_double("world.urban_fraction", w.urban_fraction);
  w.water_fraction = c.get_double("world.water_fraction", w.water_fraction);
  w.relief = c.get_double("world.relief", w.relief);
  w.tilt = c.get_double("world.tilt", w.tilt);

  auto& sm = s.sample;
  sm.n = to_int(c.get_int("sample.n", sm.n), "sample.n");
  sm.positive_fraction = c.get_double("sample.positive_fraction", sm.positive_fraction);
  sm.label_noise = c.get_double("sample.label_noise", sm.label_noise);
  sm.year = to_int(c.get_int("sample.year", sm.year), "sample.year");
  sm.seed = static_cast<std::uint64_t>(c.get_int("sample.seed", static_cast<long long>(sm.seed)));
  s.train_fraction = c.get_double("sample.train_fraction", s.train_fraction);

  s.patch_size = to_int(c.get_int("patch.size", s.patch_size), "patch.size");
  s.use_dem = c.get_bool("patch.use_dem", s.use_dem);
  const std::string mode = c.get_string("patch.label_mode", "binary");
  if (mode == "binary") s.label_mode = labeling::LabelMode::Binary;
  else if (mode == "ternary") s.label_mode = labeling::LabelMode::Ternary;
  else throw ValidationError("patch.label_mode must be binary or ternary");

  s.weights.dischargers = c.get_double("noise.dischargers", s.weights.dischargers);
  s.weights.landcover = c.get_double("noise.landcover", s.weights.landcover);
  s.weights.sample_dist = c.get_double("noise.sample_dist", s.weights.sample_dist);
  s.weights.downstream = c.get_double("noise.downstream", s.weights.downstream);
  s.weights.validate();
  s.noise.discharger_lambda = c.get_double("noise.discharger_lambda", s.noise.discharger_lambda);
  s.noise.sample_lambda = c.get_double("noise.sample_lambda", s.noise.sample_lambda);
  s.noise.landcover_radius = to_int(c.get_int("noise.landcover_radius", s.noise.landcover_radius),
                                    "noise.landcover_radius");

  s.widths = c.get_int_list("model.widths", s.widths);
  s.model_seed = static_cast<std::uint64_t>(c.get_int("model.seed", static_cast<long long>(s.model_seed)));

  auto& t = s.train;
  t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
  t.batch_size = to_int(c.get_int("train.batch_size", t.batch_size), "train.batch_size");
  t.epochs = to_int(c.get_int("train.epochs", t.epochs), "train.epochs");
  t.weight_decay = c.get_double("train.weight_decay", t.weight_decay);
  t.warmup_steps = to_int(c.get_int("train.warmup_steps", t.warmup_steps), "train.warmup_steps");
  t.total_steps = to_int(c.get_int("train.total_steps", t.total_steps), "train.total_steps");
  t.poly_power = c.get_double("train.poly_power", t.poly_power);
  t.gamma = c.get_double("train.gamma", t.gamma);
  t.beta1 = c.get_double("train.beta1", t.beta1);
  t.beta2 = c.get_double("train.beta2", t.beta2);
  t.eps = c.get_double("train.eps", t.eps);
  t.seed = static_cast<std::uint64_t>(c.get_int("train.seed", static_cast<long long>(t.seed)));

  auto& p = s.pretrain;
  p.mask_ratio = c.get_double("pretrain.mask_ratio", p.mask_ratio);
  p.block = to_int(c.get_int("pretrain.block", p.block), "pretrain.block");
  p.steps = to_int(c.get_int("pretrain.steps", p.steps), "pretrain.steps");
  p.heldout_fraction = c.get_double("pretrain.heldout_fraction", p.heldout_fraction);

  s.rule_threshold = c.get_double("rule.threshold", s.rule_threshold);
  s.krige_threshold = c.get_double("krige.threshold", s.krige_threshold);
  s.krige_bins = to_int(c.get_int("krige.bins", s.krige_bins), "krige.bins");
  s.consistency_patch = to_int(c.get_int("consistency.patch_size", s.consistency_patch), "consistency.patch_size");
  s.consistency_trials = to_int(c.get_int("consistency.trials", s.consistency_trials), "consistency.trials");
  s.consistency_overlaps = c.get_int_list("consistency.overlaps", s.consistency_overlaps);
  s.bench_runs = to_int(c.get_int("bench.runs", s.bench_runs), "bench.runs");
  s.bench_points = to_int(c.get_int("bench.points", s.bench_points), "bench.points");
  s.grid_epochs = to_int(c.get_int("grid.epochs", s.grid_epochs), "grid.epochs");

  if (seed) {
    w.seed = *seed;
    sm.seed = *seed;
    t.seed = *seed;
    s.model_seed = *seed;
  }
  if (s.patch_size <= 0) throw ValidationError("patch.size must be positive");
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) {
    throw ValidationError("sample.train_fraction must lie in (0,1)");
  }
  w.validate();
  return s;
}

int Settings::sample_margin() const { return patch_size / 2 + noise.landcover_radius + 1; }

std::string split_name(int split) { return split == kTrainSplit ? "train" : "test"; }

int parse_split(const std::string& name) {
  if (name == "train") return kTrainSplit;
  if (name == "test") return kTestSplit;
  throw ValidationError("unknown split '" + name + "'");
}

std::string format_split_csv(std::span<const labeling::SamplePoint> samples, std::span<const int> assignment) {
  std::string out = "id,split\n";
  for (std::size_t i = 0; i < samples.size(); ++i) out += samples[i].id + "," + split_name(assignment[i]) + "\n";
  return out;
}

std::vector<int> parse_split_csv(const std::string& text, std::span<const labeling::SamplePoint> samples) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,split") throw ValidationError("split CSV header must be id,split");
  std::map<std::string, int> by_id;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("split CSV: malformed line '" + line + "'");
    by_id[line.substr(0, comma)] = parse_split(line.substr(comma + 1));
  }
  std::vector<int> out;
  for (const auto& s : samples) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw ValidationError("split CSV lacks sample " + s.id);
    out.push_back(it->second);
  }
  return out;
}

std::vector<labeling::SamplePoint> samples_of(std::span<const labeling::SamplePoint> samples,
                                              std::span<const int> assignment, int split) {
  std::vector<labeling::SamplePoint> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (assignment[i] == split) out.push_back(samples[i]);
  }
  return out;
}

std::vector<PatchRecord> make_patch_records(const synth::World& world, std::span<const labeling::SamplePoint> samples,
                                            std::span<const int> assignment, const Settings& settings) {
  if (samples.size() != assignment.size()) throw ValidationError("make_patch_records: split size mismatch");
  const auto channels = world.channels(settings.use_dem);
  std::vector<PatchRecord> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    PatchRecord rec;
    rec.id = samples[i].id;
    rec.split = assignment[i];
    rec.inputs = extract_patch(channels, samples[i].location, settings.patch_size);
    const auto same = samples_of(samples, assignment, rec.split);
    const auto inside = labeling::samples_inside(same, rec.inputs.channels.front().grid);
    rec.label = labeling::expand_ground_truth(rec.inputs, inside, settings.label_mode);
    rec.noise = labeling::noise_mask(rec.inputs, rec.label, inside, settings.weights, settings.noise,
                                     settings.label_mode);
    out.push_back(std::move(rec));
  }
  return out;
}

void recompute_noise(std::vector<PatchRecord>& records, std::span<const labeling::SamplePoint> samples,
                     std::span<const int> assignment, const labeling::NoiseWeights& weights,
                     const Settings& settings) {
  for (auto& rec : records) {
    const auto same = samples_of(samples, assignment, rec.split);
    const auto inside = labeling::samples_inside(same, rec.inputs.channels.front().grid);
    rec.noise = labeling::noise_mask(rec.inputs, rec.label, inside, weights, settings.noise, settings.label_mode);
  }
}

void write_patch_record(const PatchRecord& rec, const std::filesystem::path& path) {
  PatchStack stack = rec.inputs;
  stack.add("label", ChannelRole::Label, rec.label);
  stack.add("noise", ChannelRole::Noise, rec.noise);
  write_patch(stack, path);
}

PatchRecord read_patch_record(const std::filesystem::path& path, const std::string& id, int split) {
  PatchStack stack = read_patch(path);
  PatchRecord rec;
  rec.id = id;
  rec.split = split;
  rec.inputs.size = stack.size;
  rec.inputs.center = stack.center;
  bool have_label = false, have_noise = false;
  for (auto& ch : stack.channels) {
    if (ch.role == ChannelRole::Label) {
      rec.label = std::move(ch.grid);
      have_label = true;
    } else if (ch.role == ChannelRole::Noise) {
      rec.noise = std::move(ch.grid);
      have_noise = true;
    } else {
      rec.inputs.channels.push_back(std::move(ch));
    }
  }
  if (!have_label || !have_noise) throw FormatError(path.string() + ": patch lacks label or noise channel");
  rec.inputs.validate();
  return rec;
}

model::ModelState build_model(std::span<const PatchRecord> records, const Settings& settings, std::uint64_t seed) {
  if (records.empty()) throw ValidationError("build_model: no training patches");
  const auto layout = model::FeatureLayout::from_patch(records.front().inputs);
  std::vector<nn::Tensor> feats;
  for (const auto& r : records) feats.push_back(model::encode_features(r.inputs, layout));
  model::ModelConfig mc;
  mc.in_channels = layout.channel_count();
  mc.widths = settings.widths;
  mc.num_classes = labeling::class_count(settings.label_mode);
  model::ModelState state = model::init_model(mc, seed);
  state.layout = layout;
  state.norm = model::Normalization::fit(feats);
  state.label_mode = settings.label_mode;
  return state;
}

std::vector<model::TrainingExample> make_examples(std::span<const PatchRecord> records,
                                                  const model::ModelState& state, bool with_noise) {
  std::vector<model::TrainingExample> out;
  for (const auto& r : records) {
    auto ex = model::make_example(r.inputs, r.label, with_noise ? &r.noise : nullptr, state.layout, state.label_mode);
    state.norm.apply(ex.input);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<nn::Tensor> normalized_inputs(std::span<const PatchRecord> records, const model::ModelState& state) {
  std::vector<nn::Tensor> out;
  for (const auto& r : records) {
    auto t = model::encode_features(r.inputs, state.layout);
    state.norm.apply(t);
    out.push_back(std::move(t));
  }
  return out;
}

Prediction predict_record(const model::ModelState& state, const PatchStack& inputs, const std::string& id) {
  const nn::Tensor probs = model::predict_patch(state, inputs);
  const RasterGrid& lc = inputs.require_role(ChannelRole::LandCover);
  Prediction p;
  p.id = id;
  p.labels = model::label_map(probs, lc, state.label_mode);
  p.probability = RasterGrid(lc.width(), lc.height(), lc.cell_size(), lc.origin(), lc.nodata(), lc.nodata());
  for (int r = 0; r < lc.height(); ++r) {
    for (int c = 0; c < lc.width(); ++c) {
      if (landcover::is_water(static_cast<int>(lc.at(r, c)))) p.probability.at(r, c) = 1.0 - probs.at(0, r, c);
    }
  }
  return p;
}

std::vector<Prediction> predict_records(const model::ModelState& state, std::span<const PatchRecord> records) {
  std::vector<Prediction> out;
  for (const auto& r : records) out.push_back(predict_record(state, r.inputs, r.id));
  return out;
}

void write_prediction(const Prediction& p, const std::filesystem::path& path) {
  PatchStack stack;
  stack.size = p.labels.width();
  stack.center = p.labels.cell_center(stack.size / 2, stack.size / 2);
  stack.add("probability", ChannelRole::Other, p.probability);
  stack.add("label", ChannelRole::Label, p.labels);
  write_patch(stack, path);
}

Prediction read_prediction(const std::filesystem::path& path, const std::string& id) {
  const PatchStack stack = read_patch(path);
  const Channel* prob = stack.find("probability");
  const Channel* lab = stack.find("label");
  if (!prob || !lab) throw FormatError(path.string() + ": prediction lacks probability or label channel");
  return {id, prob->grid, lab->grid};
}

eval::MetricReport evaluate_predictions(std::span<const Prediction> predictions,
                                        std::span<const labeling::SamplePoint> samples, labeling::LabelMode mode) {
  std::vector<RasterGrid> maps;
  for (const auto& p : predictions) maps.push_back(p.labels);
  return eval::sample_point_metrics(maps, samples, mode);
}

TrainOutcome train_and_evaluate(std::span<const PatchRecord> train, std::span<const PatchRecord> test,
                                std::span<const labeling::SamplePoint> test_samples, const Settings& settings,
                                model::LossMode loss_mode, std::uint64_t seed, bool log_epochs,
                                const model::ModelState* init) {
  model::ModelState state = init ? *init : build_model(train, settings, seed);
  const auto examples = make_examples(train, state, loss_mode == model::LossMode::Focus);
  model::TrainConfig cfg = settings.train;
  cfg.seed = seed;
  model::Evaluator evaluator;
  if (log_epochs && !test.empty()) {
    evaluator = [&](const model::ModelState& s, int epoch) {
      const auto rep = evaluate_predictions(predict_records(s, test), test_samples, s.label_mode);
      const auto& m = rep.macro;
      return std::vector<model::EpochMetrics>{{epoch, "test", m.accuracy, m.iou, m.fscore, m.precision, m.recall}};
    };
  }
  auto result = model::finetune(std::move(state), examples, cfg, loss_mode, evaluator);
  TrainOutcome out{std::move(result.state), std::move(result.log), {}};
  if (!test.empty()) {
    out.report = evaluate_predictions(predict_records(out.state, test), test_samples, out.state.label_mode);
  }
  return out;
}

std::string format_metric_log_csv(std::span<const model::EpochMetrics> metrics) {
  std::string out = "epoch,split,accuracy,iou,fscore,precision,recall\n";
  for (const auto& m : metrics) {
    out += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", m.epoch, m.split, m.accuracy, m.iou,
                       m.fscore, m.precision, m.recall);
  }
  return out;
}

std::string format_loss_log_csv(const model::TrainLog& log) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < log.step_loss.size(); ++i) out += fmt::format("{},{:.17g}\n", i, log.step_loss[i]);
  return out;
}

// ---------------------------------------------------------------------------

eval::MetricReport rule_baseline(const synth::World& world, std::span<const labeling::SamplePoint> known,
                                 std::span<const labeling::SamplePoint> test, const Settings& settings) {
  baselines::RuleParams params;
  params.weights = settings.weights;
  params.noise = settings.noise;
  params.threshold = settings.rule_threshold;
  const auto channels = world.channels(false);
  std::vector<RasterGrid> maps;
  for (const auto& s : test) {
    maps.push_back(
        baselines::rule_based_predict_window(channels, s.location, settings.patch_size, known, params).labels);
  }
  return eval::sample_point_metrics(maps, test, labeling::LabelMode::Binary);
}

KrigeOutcome krige_baseline(std::span<const labeling::SamplePoint> train, std::span<const labeling::SamplePoint> test,
                            const Settings& settings) {
  std::vector<Coord> pts;
  std::vector<double> vals;
  for (const auto& s : train) {
    pts.push_back(s.location);
    vals.push_back(labeling::is_positive(s.label) ? 1.0 : 0.0);
  }
  if (pts.size() < 2) throw ValidationError("krige baseline: need at least 2 training samples");
  double dmax = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      dmax = std::max(dmax, std::hypot(pts[i].easting - pts[j].easting, pts[i].northing - pts[j].northing));
    }
  }
  std::vector<double> edges;
  for (int b = 0; b <= settings.krige_bins; ++b) edges.push_back(0.5 * dmax * b / settings.krige_bins);
  const auto bins = baselines::empirical_semivariogram(pts, vals, edges);
  KrigeOutcome out;
  out.model = baselines::fit_spherical(bins);
  std::vector<int> truth, pred;
  if (out.model.sill > 0.0) {
    const baselines::OrdinaryKriging ok(pts, vals, out.model);
    for (const auto& s : test) {
      truth.push_back(labeling::is_positive(s.label) ? 1 : 0);
      pred.push_back(ok.classify(s.location, settings.krige_threshold));
    }
  } else {
    // No spatial variance: every weight scheme returns the common value.
    for (const auto& s : test) {
      truth.push_back(labeling::is_positive(s.label) ? 1 : 0);
      pred.push_back(vals.front() >= settings.krige_threshold ? 1 : 0);
    }
  }
  out.report = eval::metrics_from_labels(truth, pred, 2);
  return out;
}

eval::MetricReport simulate_baseline(const synth::World& world, std::span<const labeling::SamplePoint> test,
                                     const Settings& settings) {
  const auto channels = world.channels(false);
  const auto hru = baselines::HruTable::defaults();
  const baselines::TransportParams tp;
  std::vector<RasterGrid> conc;
  std::vector<RasterGrid> lcs;
  for (const auto& s : test) {
    const PatchStack patch = extract_patch(channels, s.location, settings.patch_size);
    const RasterGrid& lc = patch.require_role(ChannelRole::LandCover);
    const RasterGrid dis = rasterize_points(world.dischargers, lc).grid;
    PatchStack local = patch;
    local.set("flowdir", ChannelRole::FlowDir, hydro::clip_outward_directions(patch.require_role(ChannelRole::FlowDir)));
    const auto res = baselines::transport_simulate(local, dis, hru, tp);
    conc.push_back(water_only(res.concentration, lc));
    lcs.push_back(lc);
  }
  const auto binary = baselines::threshold_by_median(conc);
  std::vector<RasterGrid> maps;
  for (std::size_t i = 0; i < binary.size(); ++i) {
    RasterGrid m = binary[i];
    for (double& v : m.values()) {
      if (m.is_nodata(v)) v = labeling::non_water_label(labeling::LabelMode::Binary);
    }
    maps.push_back(std::move(m));
  }
  return eval::sample_point_metrics(maps, test, labeling::LabelMode::Binary);
}

// ---------------------------------------------------------------------------

std::vector<ConsistencyTrial> consistency_trials(const synth::World& world, const model::ModelState* state,
                                                 const Settings& settings, std::uint64_t seed) {
  const int p = settings.consistency_patch;
  const int halo = settings.noise.landcover_radius;
  const int n = world.landcover.width();
  baselines::RuleParams params;
  params.weights = settings.weights;
  params.noise = settings.noise;
  params.threshold = settings.rule_threshold;
  const auto channels = world.channels(state ? state->layout.use_dem : settings.use_dem);
  const double non_water = labeling::non_water_label(labeling::LabelMode::Binary);
  Rng rng(seed ^ 0xC0A51ULL);
  std::vector<ConsistencyTrial> out;
  for (int ov : settings.consistency_overlaps) {
    if (ov <= 0 || ov > p) throw ValidationError("consistency: overlap must lie in (0, patch size]");
    const int d = p - ov;
    const int lo = p / 2 + halo;
    const int hi = n - (p - p / 2) - halo - d;
    if (hi <= lo) throw ValidationError("consistency: world too small for the patch size");
    for (int t = 0; t < settings.consistency_trials; ++t) {
      ConsistencyTrial trial;
      trial.overlap = ov;
      trial.trial = t;
      for (int attempt = 0;; ++attempt) {
        const int r = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo)));
        const int c = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo)));
        // Require water inside the overlap so the water-only agreement exists.
        long water = 0;
        for (int rr = r - p / 2 + d; rr < r - p / 2 + p; ++rr) {
          for (int cc = c - p / 2 + d; cc < c - p / 2 + p; ++cc) {
            water += landcover::is_water(static_cast<int>(world.landcover.at(rr, cc)));
          }
        }
        if (water > 0 || attempt > 1000) {
          trial.center_a = world.landcover.cell_center(r, c);
          trial.center_b = world.landcover.cell_center(r + d, c + d);
          break;
        }
      }
      if (state) {
        const auto a = predict_record(*state, extract_patch(channels, trial.center_a, p), "a");
        const auto b = predict_record(*state, extract_patch(channels, trial.center_b, p), "b");
        trial.model_water = eval::consistency_agreement(a.labels, b.labels, non_water);
        trial.model_all = eval::consistency_agreement(a.labels, b.labels);
      }
      const auto ra = baselines::rule_based_predict_window(channels, trial.center_a, p, {}, params);
      const auto rb = baselines::rule_based_predict_window(channels, trial.center_b, p, {}, params);
      trial.rule = eval::consistency_agreement(ra.labels, rb.labels);
      out.push_back(trial);
    }
  }
  return out;
}

std::string format_consistency_csv(std::span<const ConsistencyTrial> trials) {
  std::string out = "overlap,trial,easting_a,northing_a,easting_b,northing_b,model_water,model_all,rule\n";
  for (const auto& t : trials) {
    out += fmt::format("{},{},{},{},{},{},{:.17g},{:.17g},{:.17g}\n", t.overlap, t.trial, t.center_a.easting,
                       t.center_a.northing, t.center_b.easting, t.center_b.northing, t.model_water, t.model_all,
                       t.rule);
  }
  return out;
}

std::vector<AblationRun> loss_ablation(std::span<const PatchRecord> train, std::span<const PatchRecord> test,
                                       std::span<const labeling::SamplePoint> test_samples, const Settings& settings,
                                       std::span<const std::uint64_t> seeds) {
  std::vector<AblationRun> out;
  for (std::uint64_t seed : seeds) {
    AblationRun run;
    run.seed = seed;
    run.focus = train_and_evaluate(train, test, test_samples, settings, model::LossMode::Focus, seed).report;
    run.focal = train_and_evaluate(train, test, test_samples, settings, model::LossMode::FocalOnly, seed).report;
    out.push_back(std::move(run));
  }
  return out;
}

std::vector<Coord> random_water_points(const synth::World& world, int count, int margin, std::uint64_t seed) {
  const RasterGrid& lc = world.landcover;
  std::vector<GridIndex> cand;
  for (int r = margin; r < lc.height() - margin; ++r) {
    for (int c = margin; c < lc.width() - margin; ++c) {
      if (landcover::is_water(static_cast<int>(lc.at(r, c)))) cand.push_back({r, c});
    }
  }
  if (cand.empty()) throw ValidationError("random_water_points: no water cells inside the margin");
  Rng rng(seed ^ 0xBE7C4ULL);
  std::vector<Coord> out;
  for (int k = 0; k < count; ++k) out.push_back(lc.cell_center(cand[rng.below(cand.size())]));
  return out;
}

}  // namespace focus::pipeline
