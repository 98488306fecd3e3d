#include <atomic>
#include <cstdlib>

#include "mmg/kern/kernels.hpp"

namespace mmg::kern {

const Kernels* avx2_kernels_impl();  // kernels_avx2.cpp

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const Kernels*> g_active{nullptr};

const Kernels* resolve_default() {
  if (const char* env = std::getenv("MMG_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels() != nullptr) return avx2_kernels();
    // unknown or unavailable request falls through to auto-detection
  }
  if (const Kernels* k = avx2_kernels()) return k;
  return &scalar_kernels();
}

}  // namespace

const Kernels* avx2_kernels() {
  const Kernels* k = avx2_kernels_impl();
  if (k == nullptr || !cpu_has_avx2_fma()) return nullptr;
  return k;
}

const Kernels& active() {
  const Kernels* k = g_active.load(std::memory_order_acquire);
  if (k == nullptr) {
    k = resolve_default();
    g_active.store(k, std::memory_order_release);
  }
  return *k;
}

bool select(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&scalar_kernels(), std::memory_order_release);
    return true;
  }
  if (name == "avx2") {
    if (const Kernels* k = avx2_kernels()) {
      g_active.store(k, std::memory_order_release);
      return true;
    }
  }
  return false;
}

}  // namespace mmg::kern
