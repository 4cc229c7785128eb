#include "bls/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace bls::kern {

// BLS_AVX2_TU is set by the build when kernels_avx2.cpp (compiled with -mavx2) is
// part of this target; the symbol only exists in that case.
#if defined(BLS_AVX2_TU)
extern const KernelOps avx2_ops;
#endif

namespace {

const KernelOps* avx2_if_available() {
#if defined(BLS_AVX2_TU)
#if defined(__GNUC__) && defined(__x86_64__)
  if (__builtin_cpu_supports("avx2")) return &avx2_ops;
#endif
#endif
  return nullptr;
}

const KernelOps* select() {
  if (const char* env = std::getenv("BLS_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_ops;
    if (std::strcmp(env, "avx2") == 0) {
      if (const KernelOps* k = avx2_if_available()) return k;
      return &scalar_ops;  // requested variant unavailable; fall back silently
    }
  }
  if (const KernelOps* k = avx2_if_available()) return k;
  return &scalar_ops;
}

}  // namespace

const KernelOps& kernels() {
  static const KernelOps* active = select();
  return *active;
}

const KernelOps* kernels_by_name(const char* name) {
  if (std::strcmp(name, "scalar") == 0) return &scalar_ops;
  if (std::strcmp(name, "avx2") == 0) return avx2_if_available();
  return nullptr;
}

}  // namespace bls::kern
