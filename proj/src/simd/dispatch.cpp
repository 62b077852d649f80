#include <atomic>
#include <cstdlib>
#include <string>

#include "focus/error.hpp"
#include "focus/simd.hpp"

namespace focus::simd {

#ifndef FOCUS_HAVE_AVX2
const Kernels* avx2_kernels() { return nullptr; }
#endif
#ifndef FOCUS_HAVE_NEON
const Kernels* neon_kernels() { return nullptr; }
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "scalar";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(FOCUS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#ifdef FOCUS_HAVE_NEON
      return true;
#else
      return false;
#endif
  }
  return false;
}

namespace {

const Kernels* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return &scalar_kernels();
    case Isa::Avx2: return avx2_kernels();
    case Isa::Neon: return neon_kernels();
  }
  return nullptr;
}

const Kernels* pick_default() {
  if (const char* env = std::getenv("FOCUS_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa) && supported(isa)) return table_for(isa);
    }
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (supported(isa)) return table_for(isa);
  }
  return &scalar_kernels();
}

std::atomic<const Kernels*>& slot() {
  static std::atomic<const Kernels*> current{pick_default()};
  return current;
}

}  // namespace

const Kernels& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) {
  if (!supported(isa)) throw ValidationError("SIMD table '" + std::string(isa_name(isa)) + "' is not supported here");
  slot().store(table_for(isa), std::memory_order_release);
}

}  // namespace focus::simd
