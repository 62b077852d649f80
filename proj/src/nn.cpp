#include "focus/nn.hpp"

#include <algorithm>
#include <cmath>

#include "focus/error.hpp"
#include "focus/simd.hpp"

namespace focus::nn {

void conv2d_forward(const Tensor& in, std::span<const double> weights, std::span<const double> bias, int out_channels,
                    int kernel, Tensor& out) {
  const int cin = in.channels;
  const int h = in.height;
  const int w = in.width;
  const int pad = kernel / 2;
  if (weights.size() != static_cast<std::size_t>(out_channels) * cin * kernel * kernel ||
      bias.size() != static_cast<std::size_t>(out_channels)) {
    throw ValidationError("conv2d: weight shape does not match input channels");
  }
  out = Tensor(out_channels, h, w);
  const auto& k = simd::active();
  for (int co = 0; co < out_channels; ++co) {
    auto oplane = out.plane(co);
    std::fill(oplane.begin(), oplane.end(), bias[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const double* wk = weights.data() + (static_cast<std::size_t>(co) * cin + ci) * kernel * kernel;
      const double* iplane = in.plane(ci).data();
      for (int ky = 0; ky < kernel; ++ky) {
        const int dy = ky - pad;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < kernel; ++kx) {
          const double wv = wk[ky * kernel + kx];
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          if (x1 <= x0) continue;
          for (int y = y0; y < y1; ++y) {
            k.axpy(wv, iplane + static_cast<std::size_t>(y + dy) * w + x0 + dx,
                   oplane.data() + static_cast<std::size_t>(y) * w + x0, static_cast<std::size_t>(x1 - x0));
          }
        }
      }
    }
  }
}

void conv2d_backward(const Tensor& in, std::span<const double> weights, const Tensor& grad_out, int kernel,
                     Tensor* grad_in, std::span<double> grad_weights, std::span<double> grad_bias) {
  const int cin = in.channels;
  const int cout = grad_out.channels;
  const int h = in.height;
  const int w = in.width;
  const int pad = kernel / 2;
  const auto& k = simd::active();
  if (grad_in) *grad_in = Tensor(cin, h, w);
  for (int co = 0; co < cout; ++co) {
    const double* gplane = grad_out.plane(co).data();
    grad_bias[co] += k.sum(gplane, grad_out.plane_size());
    for (int ci = 0; ci < cin; ++ci) {
      const std::size_t wbase = (static_cast<std::size_t>(co) * cin + ci) * kernel * kernel;
      const double* iplane = in.plane(ci).data();
      double* giplane = grad_in ? grad_in->plane(ci).data() : nullptr;
      for (int ky = 0; ky < kernel; ++ky) {
        const int dy = ky - pad;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < kernel; ++kx) {
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          if (x1 <= x0) continue;
          const auto len = static_cast<std::size_t>(x1 - x0);
          const double wv = weights[wbase + ky * kernel + kx];
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* g = gplane + static_cast<std::size_t>(y) * w + x0;
            const std::size_t src = static_cast<std::size_t>(y + dy) * w + x0 + dx;
            acc += k.dot(g, iplane + src, len);
            if (giplane) k.axpy(wv, g, giplane + src, len);
          }
          grad_weights[wbase + ky * kernel + kx] += acc;
        }
      }
    }
  }
}

void relu_forward(Tensor& t) { simd::active().relu(t.data.data(), t.data.data(), t.data.size()); }

void relu_backward(const Tensor& activated, Tensor& grad) {
  simd::active().relu_backward(activated.data.data(), grad.data.data(), grad.data.size());
}

Tensor avgpool2_forward(const Tensor& in) {
  if (in.height % 2 || in.width % 2) throw ValidationError("avgpool2: odd spatial size");
  Tensor out(in.channels, in.height / 2, in.width / 2);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        out.at(c, y, x) = 0.25 * (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) + in.at(c, 2 * y + 1, 2 * x) +
                                  in.at(c, 2 * y + 1, 2 * x + 1));
      }
    }
  }
  return out;
}

Tensor avgpool2_backward(const Tensor& grad_out) {
  Tensor g(grad_out.channels, grad_out.height * 2, grad_out.width * 2);
  for (int c = 0; c < grad_out.channels; ++c) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) g.at(c, y, x) = 0.25 * grad_out.at(c, y / 2, x / 2);
    }
  }
  return g;
}

Tensor upsample2_forward(const Tensor& in) {
  Tensor out(in.channels, in.height * 2, in.width * 2);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) out.at(c, y, x) = in.at(c, y / 2, x / 2);
    }
  }
  return out;
}

Tensor upsample2_backward(const Tensor& grad_out) {
  Tensor g(grad_out.channels, grad_out.height / 2, grad_out.width / 2);
  for (int c = 0; c < g.channels; ++c) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        g.at(c, y, x) = grad_out.at(c, 2 * y, 2 * x) + grad_out.at(c, 2 * y, 2 * x + 1) +
                        grad_out.at(c, 2 * y + 1, 2 * x) + grad_out.at(c, 2 * y + 1, 2 * x + 1);
      }
    }
  }
  return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.height != b.height || a.width != b.width) throw ValidationError("concat: spatial sizes differ");
  Tensor out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

void split_channels(const Tensor& grad, int split, Tensor& grad_a, Tensor& grad_b) {
  grad_a = Tensor(split, grad.height, grad.width);
  grad_b = Tensor(grad.channels - split, grad.height, grad.width);
  const auto cut = static_cast<std::ptrdiff_t>(grad_a.data.size());
  std::copy(grad.data.begin(), grad.data.begin() + cut, grad_a.data.begin());
  std::copy(grad.data.begin() + cut, grad.data.end(), grad_b.data.begin());
}

Tensor softmax_channels(const Tensor& logits) {
  Tensor out(logits.channels, logits.height, logits.width);
  const std::size_t plane = logits.plane_size();
  const int k = logits.channels;
  for (std::size_t i = 0; i < plane; ++i) {
    double mx = logits.data[i];
    for (int c = 1; c < k; ++c) mx = std::max(mx, logits.data[c * plane + i]);
    double s = 0.0;
    for (int c = 0; c < k; ++c) {
      const double e = std::exp(logits.data[c * plane + i] - mx);
      out.data[c * plane + i] = e;
      s += e;
    }
    for (int c = 0; c < k; ++c) out.data[c * plane + i] /= s;
  }
  return out;
}

}  // namespace focus::nn
