#include "focus/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "focus/error.hpp"

namespace focus::model {
namespace {

constexpr char kMagic[4] = {'F', 'C', 'K', '1'};

}  // namespace

void write_checkpoint(const ModelState& state, std::ostream& out) {
  nlohmann::json h;
  h["config"] = {{"in_channels", state.config.in_channels},
                 {"widths", state.config.widths},
                 {"num_classes", state.config.num_classes}};
  h["seed"] = state.seed;
  h["layout"] = {{"distance_channels", state.layout.distance_channels}, {"use_dem", state.layout.use_dem}};
  h["label_mode"] = state.label_mode == labeling::LabelMode::Binary ? "binary" : "ternary";
  h["normalization"] = {{"mean", state.norm.mean}, {"std", state.norm.std}};
  auto& tensors = h["tensors"] = nlohmann::json::array();
  for (const auto& p : state.params) tensors.push_back({{"name", p.name}, {"shape", p.shape}});
  const std::string text = h.dump();
  const auto len = static_cast<std::uint32_t>(text.size());
  const unsigned char lb[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                               static_cast<unsigned char>(len >> 16), static_cast<unsigned char>(len >> 24)};
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(lb), 4);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : state.params) {
    for (double v : p.values) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      const unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                  static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
      out.write(reinterpret_cast<const char*>(b), 4);
    }
  }
  if (!out) throw IoError("write_checkpoint: stream write failed");
}

void write_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(state, out);
}

ModelState read_checkpoint(std::istream& in) {
  unsigned char head[8];
  if (!in.read(reinterpret_cast<char*>(head), 8)) throw FormatError("checkpoint: truncated header");
  if (std::memcmp(head, kMagic, 4) != 0) throw FormatError("checkpoint: bad magic bytes");
  const std::uint32_t len = std::uint32_t{head[4]} | (std::uint32_t{head[5]} << 8) | (std::uint32_t{head[6]} << 16) |
                            (std::uint32_t{head[7]} << 24);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw FormatError("checkpoint: truncated JSON header");
  ModelState s;
  std::vector<std::pair<std::string, std::vector<int>>> shapes;
  try {
    const auto h = nlohmann::json::parse(text);
    s.config.in_channels = h.at("config").at("in_channels").get<int>();
    s.config.widths = h.at("config").at("widths").get<std::vector<int>>();
    s.config.num_classes = h.at("config").at("num_classes").get<int>();
    s.seed = h.at("seed").get<std::uint64_t>();
    s.layout.distance_channels = h.at("layout").at("distance_channels").get<std::vector<std::string>>();
    s.layout.use_dem = h.at("layout").at("use_dem").get<bool>();
    s.label_mode = h.at("label_mode").get<std::string>() == "ternary" ? labeling::LabelMode::Ternary
                                                                      : labeling::LabelMode::Binary;
    s.norm.mean = h.at("normalization").at("mean").get<std::vector<double>>();
    s.norm.std = h.at("normalization").at("std").get<std::vector<double>>();
    for (const auto& t : h.at("tensors")) {
      shapes.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  }
  const ModelState reference = init_model(s.config, s.seed);
  if (reference.params.size() != shapes.size()) throw CorruptionError("checkpoint: tensor count does not match config");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (reference.params[i].name != shapes[i].first || reference.params[i].shape != shapes[i].second) {
      throw CorruptionError("checkpoint: tensor '" + shapes[i].first + "' does not match the architecture");
    }
    ParamTensor p{shapes[i].first, shapes[i].second, std::vector<double>(reference.params[i].values.size())};
    std::vector<unsigned char> buf(p.values.size() * 4);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw CorruptionError("checkpoint: tensor '" + p.name + "' is truncated");
    }
    for (std::size_t k = 0; k < p.values.size(); ++k) {
      const unsigned char* b = buf.data() + 4 * k;
      const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
                                 (std::uint32_t{b[3]} << 24);
      p.values[k] = static_cast<double>(std::bit_cast<float>(bits));
    }
    s.params.push_back(std::move(p));
  }
  return s;
}

ModelState read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

ModelState quantize_parameters(ModelState state) {
  for (auto& p : state.params) {
    for (double& v : p.values) v = static_cast<double>(static_cast<float>(v));
  }
  return state;
}

}  // namespace focus::model
