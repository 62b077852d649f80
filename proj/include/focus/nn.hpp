#pragma once

#include <span>
#include <vector>

namespace focus::nn {

/// Dense channels x height x width tensor, channel-major.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  std::span<double> plane(int c) { return std::span<double>(data).subspan(c * plane_size(), plane_size()); }
  std::span<const double> plane(int c) const {
    return std::span<const double>(data).subspan(c * plane_size(), plane_size());
  }
};

/// Same-padded 2-D convolution, stride 1, odd square kernel. Weights are
/// laid out [out][in][ky][kx].
void conv2d_forward(const Tensor& in, std::span<const double> weights, std::span<const double> bias, int out_channels,
                    int kernel, Tensor& out);

/// Accumulates into grad_weights / grad_bias; writes grad_in when non-null.
void conv2d_backward(const Tensor& in, std::span<const double> weights, const Tensor& grad_out, int kernel,
                     Tensor* grad_in, std::span<double> grad_weights, std::span<double> grad_bias);

void relu_forward(Tensor& t);
/// Zeroes grad wherever the post-activation value is not positive.
void relu_backward(const Tensor& activated, Tensor& grad);

/// 2x2 average pooling; height and width must be even.
Tensor avgpool2_forward(const Tensor& in);
Tensor avgpool2_backward(const Tensor& grad_out);

/// Nearest-neighbor 2x upsampling.
Tensor upsample2_forward(const Tensor& in);
Tensor upsample2_backward(const Tensor& grad_out);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits a gradient produced for concat_channels(a, b) at channel `split`.
void split_channels(const Tensor& grad, int split, Tensor& grad_a, Tensor& grad_b);

/// Per-pixel softmax over channels.
Tensor softmax_channels(const Tensor& logits);

}  // namespace focus::nn
