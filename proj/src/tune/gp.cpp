#include "mmg/tune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmg::tune {
namespace {

constexpr double kPi = 3.14159265358979323846;

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double se_kernel(double sq, double length_scale, double signal_var) {
  return signal_var * std::exp(-0.5 * sq / (length_scale * length_scale));
}

/// In-place lower-Cholesky of a row-major n x n matrix. Returns false if a
/// non-positive pivot shows up.
bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (s <= 0.0) return false;
        a[i * n + i] = std::sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  }
  return true;
}

void solve_lower(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
}

void solve_upper_t(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  // solves L^T x = b given the lower factor
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
    b[ii] = s / l[ii * n + ii];
  }
}

struct FitAttempt {
  bool ok = false;
  double log_ml = -std::numeric_limits<double>::infinity();
  std::vector<double> chol, alpha;
};

FitAttempt try_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& z,
                   double length_scale, double noise_var) {
  const std::size_t n = x.size();
  FitAttempt at;
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = se_kernel(sq_dist(x[i], x[j]), length_scale, 1.0);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
    k[i * n + i] += noise_var;
  }
  for (double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
    std::vector<double> c = k;
    if (jitter > 0)
      for (std::size_t i = 0; i < n; ++i) c[i * n + i] += jitter;
    if (!cholesky(c, n)) continue;
    std::vector<double> alpha = z;
    solve_lower(c, n, alpha);
    double quad = 0, logdet = 0;
    for (std::size_t i = 0; i < n; ++i) {
      quad += alpha[i] * alpha[i];
      logdet += std::log(c[i * n + i]);
    }
    solve_upper_t(c, n, alpha);
    at.ok = true;
    at.log_ml = -0.5 * quad - logdet - 0.5 * n * std::log(2.0 * kPi);
    at.chol = std::move(c);
    at.alpha = std::move(alpha);
    break;
  }
  return at;
}

}  // namespace

GpModel gp_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
               const GpOptions& options) {
  if (x.size() != y.size()) throw GpError("gp_fit: input/target count mismatch");
  if (x.size() < 2) throw GpError("gp_fit: need at least 2 completed trials");
  const std::size_t n = x.size();
  const std::size_t dim = x[0].size();
  for (const auto& xi : x)
    if (xi.size() != dim) throw GpError("gp_fit: inconsistent input dimensions");

  bool all_identical = true;
  for (std::size_t i = 1; i < n && all_identical; ++i)
    if (sq_dist(x[i], x[0]) > 0) all_identical = false;
  if (all_identical) throw GpError("gp_fit: degenerate design (all inputs identical)");

  GpModel m;
  m.x = x;
  m.y = y;
  double mean = 0;
  for (const double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0;
  for (const double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  m.y_mean = mean;
  m.y_std = var > 0 ? std::sqrt(var) : 1.0;
  m.signal_var = 1.0;

  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (y[i] - m.y_mean) / m.y_std;

  const std::vector<double> ls_grid = options.fixed_length_scale
                                          ? std::vector<double>{*options.fixed_length_scale}
                                          : options.length_scale_grid;
  const std::vector<double> noise_grid =
      options.fixed_noise ? std::vector<double>{*options.fixed_noise} : options.noise_grid;

  double best_ml = -std::numeric_limits<double>::infinity();
  bool any_ok = false;
  for (const double ls : ls_grid) {
    for (const double nv : noise_grid) {
      const auto at = try_fit(x, z, ls, nv);
      if (at.ok && at.log_ml > best_ml) {
        best_ml = at.log_ml;
        m.length_scale = ls;
        m.noise_var = nv;
        m.chol = at.chol;
        m.alpha = at.alpha;
        any_ok = true;
      }
    }
  }
  if (!any_ok) throw GpError("gp_fit: no kernel setting produced a positive-definite system");
  return m;
}

GpModel::Prediction GpModel::predict(std::span<const double> q) const {
  const std::size_t n = x.size();
  Prediction p;
  if (n == 0 || chol.empty()) throw GpError("GpModel::predict: model not fitted");
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i)
    k[i] = se_kernel(sq_dist(x[i], q), length_scale, signal_var);
  double mean_std = 0;
  for (std::size_t i = 0; i < n; ++i) mean_std += k[i] * alpha[i];
  std::vector<double> v = k;
  solve_lower(chol, n, v);
  double vv = 0;
  for (const double t : v) vv += t * t;
  const double var_std = std::max(0.0, signal_var - vv);
  p.mean = y_mean + y_std * mean_std;
  p.var = var_std * y_std * y_std;
  return p;
}

double GpModel::best_observed() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const double v : y) best = std::max(best, v);
  return best;
}

double expected_improvement(double mean, double var, double f_best) {
  const double sigma = std::sqrt(std::max(0.0, var));
  const double delta = mean - f_best;
  if (sigma < 1e-15) return std::max(0.0, delta);
  const double zscore = delta / sigma;
  const double cdf = 0.5 * std::erfc(-zscore / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * zscore * zscore) / std::sqrt(2.0 * kPi);
  return delta * cdf + sigma * pdf;
}

}  // namespace mmg::tune
