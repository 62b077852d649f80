#include <algorithm>
#include <cmath>

#include "focus/simd.hpp"

namespace focus::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void relu(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* act, double* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(act[i] > 0.0)) grad[i] = 0.0;
  }
}

void adamw(double* p, const double* g, double* m, double* v, std::size_t n, const AdamWCoefficients& c) {
  const double decay = c.lr * c.weight_decay;
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    double pi = p[i] - decay * p[i];
    const double mi = c.beta1 * m[i] + one_minus_b1 * gi;
    const double vi = c.beta2 * v[i] + one_minus_b2 * (gi * gi);
    const double mhat = mi / c.bias_correction1;
    const double vhat = vi / c.bias_correction2;
    pi = pi - c.lr * mhat / (std::sqrt(vhat) + c.eps);
    p[i] = pi;
    m[i] = mi;
    v[i] = vi;
  }
}

constexpr Kernels kScalar{Isa::Scalar, dot, axpy, sum, relu, relu_backward, adamw};

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

}  // namespace focus::simd
