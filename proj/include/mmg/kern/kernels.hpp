#pragma once

#include <cstddef>
#include <string_view>

namespace mmg::kern {

/// Dense double-precision kernels behind the network math. Two backends
/// ship: a scalar reference and an AVX2/FMA variant; the active one is
/// picked at runtime from CPU features (override with MMG_KERNELS=scalar
/// or kern::select()). Backends agree to ~1e-12 relative, not bit-exactly:
/// the vector paths reassociate sums and fuse multiply-adds.
struct Kernels {
  const char* name;

  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double* y, const double* x, std::size_t n, double alpha);
  // y = W x               (W is rows x cols, row-major)
  void (*matvec)(const double* w, const double* x, double* y, std::size_t rows,
                 std::size_t cols);
  // y += W^T x            (y has cols entries, x has rows entries)
  void (*matvec_t_acc)(const double* w, const double* x, double* y, std::size_t rows,
                       std::size_t cols);
  // W += x y^T             (rank-1 accumulate, gradient outer products)
  void (*rank1_acc)(double* w, const double* x, const double* y, std::size_t rows,
                    std::size_t cols);
  // y[i] = tanh(x[i])      (libm on both backends; kept here so callers
  //                         stay backend-agnostic)
  void (*tanh_fwd)(const double* x, double* y, std::size_t n);
  // out[i] = g[i] * (1 - act[i]^2)
  void (*tanh_bwd)(const double* act, const double* g, double* out, std::size_t n);
  // fused Adam step; bc1/bc2 are the precomputed bias corrections
  // 1/(1-beta1^t) and 1/(1-beta2^t)
  void (*adam_step)(double* p, const double* g, double* m, double* v, std::size_t n,
                    double lr, double beta1, double beta2, double eps, double bc1,
                    double bc2);
};

const Kernels& scalar_kernels();

/// AVX2 backend, or nullptr when unsupported by the build or the CPU.
const Kernels* avx2_kernels();

/// The runtime-selected backend. First call resolves CPU features and the
/// MMG_KERNELS environment override; the choice then stays fixed.
const Kernels& active();

/// Force a backend by name ("scalar" / "avx2"). Returns false if the name
/// is unknown or the backend is unavailable on this machine.
bool select(std::string_view name);

}  // namespace mmg::kern
