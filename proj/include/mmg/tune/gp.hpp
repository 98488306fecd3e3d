#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mmg::tune {

struct GpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GpOptions {
  // candidate kernel hyperparameters for the marginal-likelihood grid search
  std::vector<double> length_scale_grid = {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5};
  std::vector<double> noise_grid = {1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1};
  std::optional<double> fixed_length_scale;  // bypasses the grid when set
  std::optional<double> fixed_noise;
};

/// Gaussian-process regressor with an isotropic squared-exponential kernel
/// on normalized inputs. Targets are standardized internally; predictions
/// are reported in the original units.
struct GpModel {
  std::vector<std::vector<double>> x;  // training inputs
  std::vector<double> y;               // training targets (original units)
  double y_mean = 0;
  double y_std = 1;
  double length_scale = 0.5;
  double signal_var = 1.0;  // in standardized target units
  double noise_var = 1e-6;
  std::vector<double> chol;   // lower Cholesky factor of K, row-major n x n
  std::vector<double> alpha;  // K^{-1} (y - mean)/std

  struct Prediction {
    double mean = 0;
    double var = 0;  // latent-function variance, original units squared
  };
  Prediction predict(std::span<const double> q) const;

  double best_observed() const;
};

/// Fits kernel hyperparameters by maximizing the log marginal likelihood
/// over the options' grid. Requires >= 2 points; throws GpError on an
/// all-identical input design.
GpModel gp_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
               const GpOptions& options = {});

/// Expected improvement of a candidate over f_best (maximization).
double expected_improvement(double mean, double var, double f_best);

}  // namespace mmg::tune
