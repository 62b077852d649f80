#include "focus/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "focus/bench.hpp"
#include "focus/checkpoint.hpp"
#include "focus/error.hpp"
#include "focus/kriging.hpp"
#include "focus/patch_io.hpp"
#include "focus/pipeline.hpp"
#include "focus/png.hpp"
#include "focus/simd.hpp"

namespace focus::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = ".";
};

struct Manifest {
  std::string command;
  json inputs = json::object();
  std::vector<std::string> outputs;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Context {
 public:
  explicit Context(const Common& c, std::ostream& log) : common_(c), log_(log) {
    Config cfg;
    if (!c.config.empty()) cfg = Config::load(c.config);
    settings_ = pipeline::Settings::from_config(cfg, c.seed);
    out_ = c.out;
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw IoError("cannot create output directory " + out_.string());
  }

  const pipeline::Settings& settings() const { return settings_; }
  const fs::path& out() const { return out_; }
  std::ostream& log() { return log_; }

  fs::path output(const std::string& rel) {
    manifest_.outputs.push_back(rel);
    return out_ / rel;
  }
  void input(const std::string& key, const std::string& path) { manifest_.inputs[key] = path; }

  void finish(const std::string& command) {
    json j;
    j["command"] = command;
    j["config"] = common_.config;
    j["seed"] = common_.seed ? json(*common_.seed) : json(nullptr);
    j["inputs"] = manifest_.inputs;
    j["outputs"] = manifest_.outputs;
    j["timestamp"] = utc_timestamp();
    j["version"] = kVersion;
    write_text(out_ / "manifest.json", j.dump(2) + "\n");
  }

 private:
  Common common_;
  std::ostream& log_;
  pipeline::Settings settings_;
  fs::path out_;
  Manifest manifest_;
};

struct PatchIndexRow {
  std::string id;
  int split;
  std::string file;
};

std::vector<PatchIndexRow> read_index(const fs::path& dir) {
  std::istringstream in(read_text(dir / "index.csv"));
  std::string line;
  std::getline(in, line);
  if (line != "id,split,file") throw FormatError((dir / "index.csv").string() + ": header must be id,split,file");
  std::vector<PatchIndexRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, split, file;
    if (!std::getline(row, id, ',') || !std::getline(row, split, ',') || !std::getline(row, file)) {
      throw FormatError((dir / "index.csv").string() + ": malformed line '" + line + "'");
    }
    rows.push_back({id, pipeline::parse_split(split), file});
  }
  return rows;
}

std::vector<pipeline::PatchRecord> load_records(const fs::path& dir, std::optional<int> split) {
  std::vector<pipeline::PatchRecord> out;
  for (const auto& row : read_index(dir)) {
    if (split && row.split != *split) continue;
    out.push_back(pipeline::read_patch_record(dir / row.file, row.id, row.split));
  }
  return out;
}

struct SampleSet {
  std::vector<labeling::SamplePoint> samples;
  std::vector<int> assignment;
};

SampleSet load_samples(Context& ctx, const std::string& samples, const std::string& split) {
  ctx.input("samples", samples);
  SampleSet s;
  s.samples = labeling::read_samples_csv(samples, ctx.settings().label_mode);
  if (!split.empty()) {
    ctx.input("split", split);
    s.assignment = pipeline::parse_split_csv(read_text(split), s.samples);
  }
  return s;
}

synth::World load_world(Context& ctx, const std::string& path) {
  ctx.input("world", path);
  return synth::read_world(path);
}

// ---------------------------------------------------------------------------

void cmd_gen_world(Context& ctx) {
  const auto world = synth::generate_world(ctx.settings().world);
  synth::write_world(world, ctx.output("world.fps"));
  long water = 0;
  for (double v : world.landcover.values()) water += landcover::is_water(static_cast<int>(v));
  ctx.log() << fmt::format("world {}x{} cells, {} dischargers, water share {:.4f}\n", world.spec.extent,
                           world.spec.extent, world.dischargers.size(),
                           static_cast<double>(water) / world.landcover.size());
}

void cmd_sample(Context& ctx, const std::string& world_path) {
  const auto world = load_world(ctx, world_path);
  synth::SampleConfig sc = ctx.settings().sample;
  sc.margin = ctx.settings().sample_margin();
  const auto samples = synth::sample_points(world, sc);
  const double fr[] = {ctx.settings().train_fraction, 1.0 - ctx.settings().train_fraction};
  const auto split = synth::disjoint_split(samples, world.landcover, ctx.settings().patch_size, fr);
  labeling::write_samples_csv(samples, ctx.output("samples.csv"));
  write_text(ctx.output("split.csv"), pipeline::format_split_csv(samples, split.assignment));
  ctx.log() << fmt::format("{} samples: {} train, {} test\n", samples.size(), split.members[0].size(),
                           split.members[1].size());
}

void cmd_make_patches(Context& ctx, const std::string& world_path, const std::string& samples,
                      const std::string& split) {
  const auto world = load_world(ctx, world_path);
  const auto set = load_samples(ctx, samples, split);
  if (set.assignment.empty()) throw ValidationError("make-patches needs --split");
  const auto records = pipeline::make_patch_records(world, set.samples, set.assignment, ctx.settings());
  fs::create_directories(ctx.out() / "patches");
  std::string index = "id,split,file\n";
  for (const auto& r : records) {
    const std::string file = r.id + ".fps";
    pipeline::write_patch_record(r, ctx.output("patches/" + file));
    index += r.id + "," + pipeline::split_name(r.split) + "," + file + "\n";
  }
  write_text(ctx.output("patches/index.csv"), index);
  ctx.log() << fmt::format("wrote {} patches\n", records.size());
}

void cmd_pretrain(Context& ctx, const std::string& patches) {
  ctx.input("patches", patches);
  const auto train = load_records(patches, pipeline::kTrainSplit);
  auto state = pipeline::build_model(train, ctx.settings(), ctx.settings().model_seed);
  const auto inputs = pipeline::normalized_inputs(train, state);
  model::TrainConfig cfg = ctx.settings().train;
  const auto res = model::pretrain_mae(std::move(state), inputs, ctx.settings().pretrain, cfg);
  model::write_checkpoint(res.state, ctx.output("pretrained.fck"));
  std::string log = "step,loss\n";
  for (std::size_t i = 0; i < res.step_loss.size(); ++i) log += fmt::format("{},{:.17g}\n", i, res.step_loss[i]);
  write_text(ctx.output("pretrain_log.csv"), log);
  ctx.log() << fmt::format("held-out masked MSE {:.6f} -> {:.6f}\n", res.initial_heldout_mse,
                           res.final_heldout_mse);
}

void cmd_train(Context& ctx, const std::string& patches, const std::string& loss, const std::string& init,
               const std::string& samples) {
  ctx.input("patches", patches);
  model::LossMode mode;
  if (loss == "focus") mode = model::LossMode::Focus;
  else if (loss == "focal") mode = model::LossMode::FocalOnly;
  else throw ValidationError("--loss must be focus or focal");
  const auto all = load_records(patches, std::nullopt);
  std::vector<pipeline::PatchRecord> train, test;
  for (const auto& r : all) (r.split == pipeline::kTrainSplit ? train : test).push_back(r);
  std::optional<model::ModelState> start;
  if (!init.empty()) {
    ctx.input("init", init);
    start = model::read_checkpoint(init);
  }
  std::vector<labeling::SamplePoint> test_samples;
  if (!samples.empty()) {
    const auto set = load_samples(ctx, samples, "");
    std::set<std::string> ids;
    for (const auto& r : test) ids.insert(r.id);
    for (const auto& s : set.samples) {
      if (ids.count(s.id)) test_samples.push_back(s);
    }
  } else {
    test.clear();
  }
  auto res = pipeline::train_and_evaluate(train, test, test_samples, ctx.settings(), mode, ctx.settings().train.seed,
                                          !test.empty(), start ? &*start : nullptr);
  model::write_checkpoint(res.state, ctx.output("model.fck"));
  write_text(ctx.output("loss_log.csv"), pipeline::format_loss_log_csv(res.log));
  write_text(ctx.output("metrics_log.csv"), pipeline::format_metric_log_csv(res.log.metrics));
  ctx.log() << fmt::format("trained {} steps, final loss {:.6f}\n", res.log.step_loss.size(),
                           res.log.step_loss.empty() ? 0.0 : res.log.step_loss.back());
}

void cmd_predict(Context& ctx, const std::string& model_path, const std::string& patches, const std::string& split) {
  ctx.input("model", model_path);
  ctx.input("patches", patches);
  const auto state = model::read_checkpoint(model_path);
  std::optional<int> which;
  if (split != "all") which = pipeline::parse_split(split);
  const auto records = load_records(patches, which);
  fs::create_directories(ctx.out() / "predictions");
  std::string index = "id,split,file\n";
  for (const auto& r : records) {
    const auto p = pipeline::predict_record(state, r.inputs, r.id);
    pipeline::write_prediction(p, ctx.output("predictions/" + r.id + ".fps"));
    write_label_png(p.labels, ctx.output("predictions/" + r.id + "_label.png"));
    write_probability_png(p.probability, ctx.output("predictions/" + r.id + "_prob.png"));
    index += r.id + "," + pipeline::split_name(r.split) + "," + r.id + ".fps\n";
  }
  write_text(ctx.output("predictions/index.csv"), index);
  ctx.log() << fmt::format("predicted {} patches\n", records.size());
}

void cmd_evaluate(Context& ctx, const std::string& predictions, const std::string& samples) {
  ctx.input("predictions", predictions);
  const auto set = load_samples(ctx, samples, "");
  std::vector<pipeline::Prediction> preds;
  std::set<std::string> ids;
  for (const auto& row : read_index(predictions)) {
    preds.push_back(pipeline::read_prediction(fs::path(predictions) / row.file, row.id));
    ids.insert(row.id);
  }
  std::vector<labeling::SamplePoint> scored;
  for (const auto& s : set.samples) {
    if (ids.count(s.id)) scored.push_back(s);
  }
  const auto rep = pipeline::evaluate_predictions(preds, scored, ctx.settings().label_mode);
  write_text(ctx.output("metrics.csv"), eval::format_report_csv(rep));
  write_text(ctx.output("metrics.txt"), eval::format_report_table(rep));
  ctx.log() << eval::format_report_table(rep);
}

void cmd_baseline(Context& ctx, const std::string& method, const std::string& world_path, const std::string& samples,
                  const std::string& split) {
  const auto set = load_samples(ctx, samples, split);
  if (set.assignment.empty()) throw ValidationError("baseline needs --split");
  const auto train = pipeline::samples_of(set.samples, set.assignment, pipeline::kTrainSplit);
  const auto test = pipeline::samples_of(set.samples, set.assignment, pipeline::kTestSplit);
  eval::MetricReport rep;
  if (method == "rule") {
    rep = pipeline::rule_baseline(load_world(ctx, world_path), train, test, ctx.settings());
  } else if (method == "krige") {
    const auto k = pipeline::krige_baseline(train, test, ctx.settings());
    baselines::write_variogram_json(k.model, ctx.output("variogram.json"));
    rep = k.report;
  } else if (method == "simulate") {
    rep = pipeline::simulate_baseline(load_world(ctx, world_path), test, ctx.settings());
  } else {
    throw ValidationError("baseline method must be rule, krige or simulate");
  }
  write_text(ctx.output("baseline_" + method + ".csv"), eval::format_report_csv(rep));
  write_text(ctx.output("baseline_" + method + ".txt"), eval::format_report_table(rep));
  ctx.log() << eval::format_report_table(rep);
}

void cmd_ablate(Context& ctx, const std::string& world_path, const std::string& samples, const std::string& split) {
  const auto world = load_world(ctx, world_path);
  const auto set = load_samples(ctx, samples, split);
  if (set.assignment.empty()) throw ValidationError("ablate-noise-weights needs --split");
  pipeline::Settings s = ctx.settings();
  if (s.grid_epochs > 0) s.train.epochs = s.grid_epochs;
  auto records = pipeline::make_patch_records(world, set.samples, set.assignment, s);
  const auto test_samples = pipeline::samples_of(set.samples, set.assignment, pipeline::kTestSplit);
  const auto grid = eval::default_weight_grid();
  const auto rows = eval::noise_weight_grid_search(grid, [&](const labeling::NoiseWeights& w) {
    pipeline::recompute_noise(records, set.samples, set.assignment, w, s);
    std::vector<pipeline::PatchRecord> train, test;
    for (const auto& r : records) (r.split == pipeline::kTrainSplit ? train : test).push_back(r);
    return pipeline::train_and_evaluate(train, test, test_samples, s, model::LossMode::Focus, s.train.seed).report;
  });
  write_text(ctx.output("grid_search.csv"), eval::format_grid_csv(rows));
  write_text(ctx.output("grid_search.txt"), eval::format_grid_table(rows));
  ctx.log() << eval::format_grid_table(rows);
}

void cmd_consistency(Context& ctx, const std::string& world_path, const std::string& model_path) {
  const auto world = load_world(ctx, world_path);
  std::optional<model::ModelState> state;
  if (!model_path.empty()) {
    ctx.input("model", model_path);
    state = model::read_checkpoint(model_path);
  }
  const auto trials =
      pipeline::consistency_trials(world, state ? &*state : nullptr, ctx.settings(), ctx.settings().world.seed);
  write_text(ctx.output("consistency.csv"), pipeline::format_consistency_csv(trials));
  for (const auto& t : trials) {
    ctx.log() << fmt::format("overlap {:>3} trial {}: model water {:.4f}, model all {:.4f}, rule {:.4f}\n",
                             t.overlap, t.trial, t.model_water, t.model_all, t.rule);
  }
}

void cmd_bench(Context& ctx, const std::string& world_path) {
  const auto world = load_world(ctx, world_path);
  const auto& s = ctx.settings();
  const auto points =
      pipeline::random_water_points(world, s.bench_points, s.patch_size / 2 + 1, s.world.seed);
  eval::BenchConfig bc;
  bc.runs = s.bench_runs;
  bc.patch_size = s.patch_size;
  const auto channels = world.channels(s.use_dem);
  std::string csv = "mode,points,runs,mean_seconds,std_seconds,threads,isa\n";
  for (auto mode : {eval::BenchMode::PatchPipeline, eval::BenchMode::PerPointAggregation}) {
    const auto r = eval::timing_benchmark(channels, points, mode, bc);
    csv += fmt::format("{},{},{},{:.6f},{:.6f},{},{}\n", eval::bench_mode_name(mode), r.points, r.seconds.size(),
                       r.mean, r.stddev, r.threads, simd::isa_name(simd::active().isa));
    ctx.log() << fmt::format("{:<22} mean {:.4f} s  std {:.4f} s  ({} runs, {} thread)\n",
                             eval::bench_mode_name(mode), r.mean, r.stddev, r.seconds.size(), r.threads);
  }
  write_text(ctx.output("bench.csv"), csv);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const CorruptionError*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surface-water contamination mapping from sparse samples"};
  app.name("focus");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Seed overriding every configured seed");
    sub->add_option("--config", common.config, "Key/value config file");
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
  };

  std::string world, samples, split, patches, model_path, loss = "focus", init, predictions, method,
      which = "test";

  auto* gen = app.add_subcommand("gen-world", "Generate a synthetic world");
  auto* smp = app.add_subcommand("sample", "Sample water cells and split them disjointly");
  smp->add_option("--world", world, "World file")->required();
  auto* mkp = app.add_subcommand("make-patches", "Extract patches with labels and noise masks");
  mkp->add_option("--world", world, "World file")->required();
  mkp->add_option("--samples", samples, "Samples CSV")->required();
  mkp->add_option("--split", split, "Split CSV")->required();
  auto* pre = app.add_subcommand("pretrain", "Masked-autoencoder pretraining on training patches");
  pre->add_option("--patches", patches, "Patch directory")->required();
  auto* trn = app.add_subcommand("train", "Fine-tune the segmentation model");
  trn->add_option("--patches", patches, "Patch directory")->required();
  trn->add_option("--loss", loss, "focus or focal")->check(CLI::IsMember({"focus", "focal"}));
  trn->add_option("--init", init, "Checkpoint to start from (e.g. pretrained)");
  trn->add_option("--samples", samples, "Samples CSV enabling per-epoch test metrics");
  auto* prd = app.add_subcommand("predict", "Predict probability and label maps");
  prd->add_option("--model", model_path, "Checkpoint")->required();
  prd->add_option("--patches", patches, "Patch directory")->required();
  prd->add_option("--split", which, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  auto* evl = app.add_subcommand("evaluate", "Sample-point metrics of predictions");
  evl->add_option("--predictions", predictions, "Prediction directory")->required();
  evl->add_option("--samples", samples, "Samples CSV")->required();
  auto* bsl = app.add_subcommand("baseline", "Run a comparison method");
  bsl->add_option("method", method, "rule, krige or simulate")->required()->check(
      CLI::IsMember({"rule", "krige", "simulate"}));
  bsl->add_option("--world", world, "World file");
  bsl->add_option("--samples", samples, "Samples CSV")->required();
  bsl->add_option("--split", split, "Split CSV")->required();
  auto* abl = app.add_subcommand("ablate-noise-weights", "Grid search over the 24 noise weight permutations");
  abl->add_option("--world", world, "World file")->required();
  abl->add_option("--samples", samples, "Samples CSV")->required();
  abl->add_option("--split", split, "Split CSV")->required();
  auto* con = app.add_subcommand("consistency", "Agreement of predictions on overlapping patches");
  con->add_option("--world", world, "World file")->required();
  con->add_option("--model", model_path, "Checkpoint (rule-based only when omitted)");
  auto* bch = app.add_subcommand("bench", "Feature extraction timing benchmark");
  bch->add_option("--world", world, "World file")->required();
  for (auto* sub : {gen, smp, mkp, pre, trn, prd, evl, bsl, abl, con, bch}) add_common(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    Context ctx(common, out);
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (sub == gen) cmd_gen_world(ctx);
    else if (sub == smp) cmd_sample(ctx, world);
    else if (sub == mkp) cmd_make_patches(ctx, world, samples, split);
    else if (sub == pre) cmd_pretrain(ctx, patches);
    else if (sub == trn) cmd_train(ctx, patches, loss, init, samples);
    else if (sub == prd) cmd_predict(ctx, model_path, patches, which);
    else if (sub == evl) cmd_evaluate(ctx, predictions, samples);
    else if (sub == bsl) {
      if (method != "krige" && world.empty()) throw ValidationError("baseline " + method + " needs --world");
      cmd_baseline(ctx, method, world, samples, split);
    } else if (sub == abl) cmd_ablate(ctx, world, samples, split);
    else if (sub == con) cmd_consistency(ctx, world, model_path);
    else if (sub == bch) cmd_bench(ctx, world);
    ctx.finish(name);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace focus::cli
