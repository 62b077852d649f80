#pragma once

#include <cstddef>
#include <string_view>

namespace focus::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct AdamWCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double weight_decay;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

/// Data-parallel inner loops. Every table implements the same contracts;
/// the scalar table is the reference the others are tested against.
struct Kernels {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  /// out[i] = max(in[i], 0)
  void (*relu)(const double* in, double* out, std::size_t n);
  /// grad[i] = act[i] > 0 ? grad[i] : 0
  void (*relu_backward)(const double* act, double* grad, std::size_t n);
  /// Decoupled weight decay AdamW step over one tensor. Uses no fused
  /// multiply-add, so every table produces bit-identical results.
  void (*adamw)(double* param, const double* grad, double* m, double* v, std::size_t n,
                const AdamWCoefficients& c);
};

const Kernels& scalar_kernels();
/// nullptr when the table was not compiled for this target.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

/// Whether this CPU can run the given table.
bool supported(Isa isa);

/// Table chosen once per process: the widest supported ISA, overridable with
/// FOCUS_SIMD=scalar|avx2|neon.
const Kernels& active();

/// Overrides the active table (tests and benchmarks). Throws if unsupported.
void set_active(Isa isa);

}  // namespace focus::simd
