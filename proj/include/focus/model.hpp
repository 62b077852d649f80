#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "focus/labeling.hpp"
#include "focus/nn.hpp"
#include "focus/raster.hpp"

namespace focus::model {

/// Which patch channels feed the network and how. Land cover and flow
/// direction are one-hot expanded; distance and DEM channels pass through.
struct FeatureLayout {
  std::vector<std::string> distance_channels;
  bool use_dem = false;

  static FeatureLayout from_patch(const PatchStack& patch);
  int channel_count() const;
  bool operator==(const FeatureLayout&) const = default;
};

inline constexpr int kFlowDirClasses = 9;

/// Raw (unnormalized) feature tensor for a patch.
nn::Tensor encode_features(const PatchStack& patch, const FeatureLayout& layout);

/// Per-channel z-score statistics.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> std;

  static Normalization fit(const std::vector<nn::Tensor>& features);
  void apply(nn::Tensor& t) const;
  void invert(nn::Tensor& t) const;
};

struct ModelConfig {
  int in_channels = 0;
  /// Encoder widths, one per stage; the network downsamples 2x between
  /// stages so patch sizes must be divisible by 2^(stages-1).
  std::vector<int> widths = {16, 32, 48, 64};
  int num_classes = 2;
};

struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
};

struct ModelState {
  ModelConfig config;
  std::uint64_t seed = 0;
  FeatureLayout layout;
  Normalization norm;
  labeling::LabelMode label_mode = labeling::LabelMode::Binary;
  std::vector<ParamTensor> params;

  std::size_t parameter_count() const;
  const ParamTensor& param(const std::string& name) const;
};

/// Fresh model with He-normal weights and zero biases drawn from `seed`.
ModelState init_model(const ModelConfig& config, std::uint64_t seed);

/// Gradient buffers congruent with ModelState::params.
using Gradients = std::vector<std::vector<double>>;
Gradients zero_gradients(const ModelState& state);

/// Activations kept for the backward pass.
struct ForwardCache {
  nn::Tensor input;
  std::vector<nn::Tensor> enc;      // post-ReLU encoder stage outputs
  std::vector<nn::Tensor> pooled;   // pooled input of stages 1..n-1
  std::vector<nn::Tensor> dec_in;   // concatenated decoder inputs
  std::vector<nn::Tensor> dec;      // post-ReLU decoder outputs
};

enum class Head { Segmentation, Reconstruction };

/// Trunk + head. Returns segmentation logits (K channels) or the
/// reconstruction (C channels).
nn::Tensor forward_raw(const ModelState& state, const nn::Tensor& input, Head head, ForwardCache* cache = nullptr);

/// Backprop of a head-output gradient into `grads` (accumulating).
void backward(const ModelState& state, const ForwardCache& cache, const nn::Tensor& grad_head, Head head,
              Gradients& grads);

/// Per-cell class probabilities for a normalized feature tensor.
nn::Tensor forward(const ModelState& state, const nn::Tensor& normalized_input);

/// Encodes, normalizes and runs a patch.
nn::Tensor predict_patch(const ModelState& state, const PatchStack& patch);

/// Argmax class map over water cells; non-water cells carry
/// non_water_label(mode).
RasterGrid label_map(const nn::Tensor& probs, const RasterGrid& landcover, labeling::LabelMode mode);

}  // namespace focus::model
