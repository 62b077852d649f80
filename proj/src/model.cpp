#include "focus/model.hpp"

#include <algorithm>
#include <cmath>

#include "focus/error.hpp"
#include "focus/hydro.hpp"
#include "focus/rng.hpp"

namespace focus::model {
namespace {

int stage_count(const ModelConfig& c) { return static_cast<int>(c.widths.size()); }

void check_config(const ModelConfig& c) {
  if (c.in_channels <= 0) throw ValidationError("model: in_channels must be positive");
  if (c.widths.empty()) throw ValidationError("model: at least one stage is required");
  for (int w : c.widths) {
    if (w <= 0) throw ValidationError("model: widths must be positive");
  }
  if (c.num_classes < 2) throw ValidationError("model: need at least two classes");
}

int flowdir_index(int code) {
  if (code == hydro::kSink) return 0;
  for (int i = 0; i < 8; ++i) {
    if (hydro::kSteps[i].code == code) return i + 1;
  }
  throw ValidationError("encode_features: invalid flow direction code " + std::to_string(code));
}

struct View {
  const std::vector<double>* w;
  const std::vector<double>* b;
};

}  // namespace

FeatureLayout FeatureLayout::from_patch(const PatchStack& patch) {
  FeatureLayout layout;
  for (const Channel* ch : patch.all_of_role(ChannelRole::Distance)) layout.distance_channels.push_back(ch->name);
  layout.use_dem = patch.find_role(ChannelRole::Dem) != nullptr;
  return layout;
}

int FeatureLayout::channel_count() const {
  return landcover::kGroupCount + kFlowDirClasses + static_cast<int>(distance_channels.size()) + (use_dem ? 1 : 0);
}

nn::Tensor encode_features(const PatchStack& patch, const FeatureLayout& layout) {
  const RasterGrid& lc = patch.require_role(ChannelRole::LandCover);
  const RasterGrid& dirs = patch.require_role(ChannelRole::FlowDir);
  const int h = lc.height();
  const int w = lc.width();
  nn::Tensor t(layout.channel_count(), h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      t.at(static_cast<int>(landcover::group_of(static_cast<int>(lc.at(y, x)))), y, x) = 1.0;
      t.at(landcover::kGroupCount + flowdir_index(static_cast<int>(dirs.at(y, x))), y, x) = 1.0;
    }
  }
  int c = landcover::kGroupCount + kFlowDirClasses;
  for (const auto& name : layout.distance_channels) {
    const Channel* ch = patch.find(name);
    if (!ch) throw ValidationError("encode_features: patch lacks distance channel '" + name + "'");
    auto plane = t.plane(c++);
    const auto vals = ch->grid.values();
    for (std::size_t i = 0; i < plane.size(); ++i) {
      // A category with no discharger anywhere has an all-nodata channel;
      // treat it as "very far".
      plane[i] = ch->grid.is_nodata(vals[i]) ? 1e5 : vals[i];
    }
  }
  if (layout.use_dem) {
    const RasterGrid& dem = patch.require_role(ChannelRole::Dem);
    auto plane = t.plane(c++);
    std::copy(dem.values().begin(), dem.values().end(), plane.begin());
  }
  return t;
}

Normalization Normalization::fit(const std::vector<nn::Tensor>& features) {
  if (features.empty()) throw ValidationError("Normalization::fit: no tensors");
  const int c = features.front().channels;
  Normalization n{std::vector<double>(c, 0.0), std::vector<double>(c, 1.0)};
  for (int k = 0; k < c; ++k) {
    double sum = 0.0;
    double count = 0.0;
    for (const auto& t : features) {
      for (double v : t.plane(k)) sum += v;
      count += static_cast<double>(t.plane_size());
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& t : features) {
      for (double v : t.plane(k)) ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / count);
    n.mean[k] = mean;
    n.std[k] = sd > 1e-8 ? sd : 1.0;
  }
  return n;
}

void Normalization::apply(nn::Tensor& t) const {
  if (static_cast<int>(mean.size()) != t.channels) throw ValidationError("normalization channel count mismatch");
  for (int k = 0; k < t.channels; ++k) {
    for (double& v : t.plane(k)) v = (v - mean[k]) / std[k];
  }
}

void Normalization::invert(nn::Tensor& t) const {
  if (static_cast<int>(mean.size()) != t.channels) throw ValidationError("normalization channel count mismatch");
  for (int k = 0; k < t.channels; ++k) {
    for (double& v : t.plane(k)) v = v * std[k] + mean[k];
  }
}

std::size_t ModelState::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.values.size();
  return n;
}

const ParamTensor& ModelState::param(const std::string& name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  throw ValidationError("model has no parameter '" + name + "'");
}

ModelState init_model(const ModelConfig& config, std::uint64_t seed) {
  check_config(config);
  ModelState s;
  s.config = config;
  s.seed = seed;
  Rng rng(seed);
  auto add_conv = [&](const std::string& name, int in, int out, int k) {
    ParamTensor w{name + ".weight", {out, in, k, k}, std::vector<double>(static_cast<std::size_t>(out) * in * k * k)};
    const double scale = std::sqrt(2.0 / (in * k * k));
    for (double& v : w.values) v = rng.normal() * scale;
    s.params.push_back(std::move(w));
    s.params.push_back({name + ".bias", {out}, std::vector<double>(out, 0.0)});
  };
  const auto& wd = config.widths;
  const int n = stage_count(config);
  for (int i = 0; i < n; ++i) add_conv("enc" + std::to_string(i), i == 0 ? config.in_channels : wd[i - 1], wd[i], 3);
  for (int i = n - 2; i >= 0; --i) add_conv("dec" + std::to_string(i), wd[i + 1] + wd[i], wd[i], 3);
  add_conv("seg", wd[0], config.num_classes, 1);
  add_conv("rec", wd[0], config.in_channels, 1);
  return s;
}

Gradients zero_gradients(const ModelState& state) {
  Gradients g;
  g.reserve(state.params.size());
  for (const auto& p : state.params) g.emplace_back(p.values.size(), 0.0);
  return g;
}

// Parameter order: enc0..enc{n-1}, dec{n-2}..dec0, seg, rec; two tensors each.
namespace {

std::size_t enc_index(int i) { return 2 * static_cast<std::size_t>(i); }
std::size_t dec_index(int n, int i) { return 2 * static_cast<std::size_t>(n + (n - 2 - i)); }
std::size_t head_index(int n, Head head) {
  return 2 * static_cast<std::size_t>(2 * n - 1 + (head == Head::Reconstruction ? 1 : 0));
}

}  // namespace

nn::Tensor forward_raw(const ModelState& state, const nn::Tensor& input, Head head, ForwardCache* cache) {
  const auto& cfg = state.config;
  const int n = stage_count(cfg);
  if (input.channels != cfg.in_channels) {
    throw ValidationError("model expects " + std::to_string(cfg.in_channels) + " input channels, got " +
                          std::to_string(input.channels));
  }
  const int factor = 1 << (n - 1);
  if (input.height % factor || input.width % factor) {
    throw ValidationError("patch size must be divisible by " + std::to_string(factor));
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  c.input = input;
  c.enc.resize(n);
  c.pooled.resize(n);
  c.dec_in.resize(n);
  c.dec.resize(n);
  const auto& P = state.params;

  for (int i = 0; i < n; ++i) {
    const nn::Tensor* src = &c.input;
    if (i > 0) {
      c.pooled[i] = nn::avgpool2_forward(c.enc[i - 1]);
      src = &c.pooled[i];
    }
    nn::conv2d_forward(*src, P[enc_index(i)].values, P[enc_index(i) + 1].values, cfg.widths[i], 3, c.enc[i]);
    nn::relu_forward(c.enc[i]);
  }
  const nn::Tensor* top = &c.enc[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    c.dec_in[i] = nn::concat_channels(nn::upsample2_forward(*top), c.enc[i]);
    nn::conv2d_forward(c.dec_in[i], P[dec_index(n, i)].values, P[dec_index(n, i) + 1].values, cfg.widths[i], 3,
                       c.dec[i]);
    nn::relu_forward(c.dec[i]);
    top = &c.dec[i];
  }
  const std::size_t h = head_index(n, head);
  const int out_ch = head == Head::Segmentation ? cfg.num_classes : cfg.in_channels;
  nn::Tensor out;
  nn::conv2d_forward(*top, P[h].values, P[h + 1].values, out_ch, 1, out);
  return out;
}

void backward(const ModelState& state, const ForwardCache& c, const nn::Tensor& grad_head, Head head,
              Gradients& grads) {
  const auto& cfg = state.config;
  const int n = stage_count(cfg);
  const auto& P = state.params;
  const nn::Tensor& top = n > 1 ? c.dec[0] : c.enc[0];

  const std::size_t h = head_index(n, head);
  nn::Tensor g_top;
  nn::conv2d_backward(top, P[h].values, grad_head, 1, &g_top, grads[h], grads[h + 1]);

  // Gradients flowing into each encoder output through skip connections.
  std::vector<nn::Tensor> g_enc_skip(n);
  for (int i = 0; i < n - 1; ++i) {
    nn::relu_backward(c.dec[i], g_top);
    nn::Tensor g_in;
    nn::conv2d_backward(c.dec_in[i], P[dec_index(n, i)].values, g_top, 3, &g_in, grads[dec_index(n, i)],
                        grads[dec_index(n, i) + 1]);
    nn::Tensor g_up;
    nn::split_channels(g_in, g_in.channels - cfg.widths[i], g_up, g_enc_skip[i]);
    g_top = nn::upsample2_backward(g_up);
  }
  // g_top now holds the gradient of the deepest encoder output.
  nn::Tensor g = std::move(g_top);
  for (int i = n - 1; i >= 0; --i) {
    if (i < n - 1) {
      auto& skip = g_enc_skip[i];
      for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += skip.data[k];
    }
    nn::relu_backward(c.enc[i], g);
    const nn::Tensor& src = i > 0 ? c.pooled[i] : c.input;
    if (i > 0) {
      nn::Tensor g_src;
      nn::conv2d_backward(src, P[enc_index(i)].values, g, 3, &g_src, grads[enc_index(i)], grads[enc_index(i) + 1]);
      g = nn::avgpool2_backward(g_src);
    } else {
      nn::conv2d_backward(src, P[enc_index(i)].values, g, 3, nullptr, grads[enc_index(i)], grads[enc_index(i) + 1]);
    }
  }
}

nn::Tensor forward(const ModelState& state, const nn::Tensor& normalized_input) {
  return nn::softmax_channels(forward_raw(state, normalized_input, Head::Segmentation));
}

nn::Tensor predict_patch(const ModelState& state, const PatchStack& patch) {
  nn::Tensor x = encode_features(patch, state.layout);
  state.norm.apply(x);
  return forward(state, x);
}

RasterGrid label_map(const nn::Tensor& probs, const RasterGrid& lc, labeling::LabelMode mode) {
  RasterGrid out(lc.width(), lc.height(), lc.cell_size(), lc.origin(), labeling::non_water_label(mode), lc.nodata());
  for (int y = 0; y < lc.height(); ++y) {
    for (int x = 0; x < lc.width(); ++x) {
      if (!landcover::is_water(static_cast<int>(lc.at(y, x)))) continue;
      int best = 0;
      for (int k = 1; k < probs.channels; ++k) {
        if (probs.at(k, y, x) > probs.at(best, y, x)) best = k;
      }
      out.at(y, x) = best;
    }
  }
  return out;
}

}  // namespace focus::model
