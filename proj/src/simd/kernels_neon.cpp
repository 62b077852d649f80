#include <arm_neon.h>

#include <cmath>

#include "focus/simd.hpp"

namespace focus::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

void relu(const double* in, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(in + i);
    vst1q_f64(out + i, vbslq_f64(vcgtq_f64(v, zero), v, zero));
  }
  for (; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* act, double* grad, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(grad + i, vbslq_f64(vcgtq_f64(vld1q_f64(act + i), zero), vld1q_f64(grad + i), zero));
  }
  for (; i < n; ++i) {
    if (!(act[i] > 0.0)) grad[i] = 0.0;
  }
}

void adamw(double* p, const double* g, double* m, double* v, std::size_t n, const AdamWCoefficients& c) {
  const double decay_s = c.lr * c.weight_decay;
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t gi = vld1q_f64(g + i);
    float64x2_t pi = vld1q_f64(p + i);
    pi = vsubq_f64(pi, vmulq_f64(vdupq_n_f64(decay_s), pi));
    const float64x2_t mi =
        vaddq_f64(vmulq_f64(vdupq_n_f64(c.beta1), vld1q_f64(m + i)), vmulq_f64(vdupq_n_f64(one_minus_b1), gi));
    const float64x2_t vi = vaddq_f64(vmulq_f64(vdupq_n_f64(c.beta2), vld1q_f64(v + i)),
                                     vmulq_f64(vdupq_n_f64(one_minus_b2), vmulq_f64(gi, gi)));
    const float64x2_t mhat = vdivq_f64(mi, vdupq_n_f64(c.bias_correction1));
    const float64x2_t vhat = vdivq_f64(vi, vdupq_n_f64(c.bias_correction2));
    const float64x2_t step = vdivq_f64(vmulq_f64(vdupq_n_f64(c.lr), mhat),
                                       vaddq_f64(vsqrtq_f64(vhat), vdupq_n_f64(c.eps)));
    vst1q_f64(p + i, vsubq_f64(pi, step));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
  }
  for (; i < n; ++i) {
    const double gi = g[i];
    double pi = p[i] - decay_s * p[i];
    const double mi = c.beta1 * m[i] + one_minus_b1 * gi;
    const double vi = c.beta2 * v[i] + one_minus_b2 * (gi * gi);
    pi = pi - c.lr * (mi / c.bias_correction1) / (std::sqrt(vi / c.bias_correction2) + c.eps);
    p[i] = pi;
    m[i] = mi;
    v[i] = vi;
  }
}

constexpr Kernels kNeon{Isa::Neon, dot, axpy, sum, relu, relu_backward, adamw};

}  // namespace

const Kernels* neon_kernels() { return &kNeon; }

}  // namespace focus::simd
