#include <cmath>
#include <cstddef>

#include "mmg/kern/kernels.hpp"

namespace mmg::kern {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double* y, const double* x, std::size_t n, double alpha) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* w, const double* x, double* y, std::size_t rows,
                   std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(w + r * cols, x, cols);
}

void matvec_t_acc_scalar(const double* w, const double* x, double* y, std::size_t rows,
                         std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(y, w + r * cols, cols, x[r]);
}

void rank1_acc_scalar(double* w, const double* x, const double* y, std::size_t rows,
                      std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(w + r * cols, y, cols, x[r]);
}

void tanh_fwd_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_bwd_scalar(const double* act, const double* g, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = g[i] * (1.0 - act[i] * act[i]);
}

void adam_step_scalar(double* p, const double* g, double* m, double* v, std::size_t n,
                      double lr, double beta1, double beta2, double eps, double bc1,
                      double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double m_hat = m[i] * bc1;
    const double v_hat = v[i] * bc2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k = {
      "scalar",          dot_scalar,      axpy_scalar,     matvec_scalar,
      matvec_t_acc_scalar, rank1_acc_scalar, tanh_fwd_scalar, tanh_bwd_scalar,
      adam_step_scalar,
  };
  return k;
}

}  // namespace mmg::kern
