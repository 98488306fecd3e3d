#pragma once

#include <span>
#include <vector>

namespace mmg::nn {

/// One draw from the squashed-Gaussian policy head.
struct PolicySample {
  std::vector<double> action;      // tanh(u), componentwise strictly inside (-1, 1)
  std::vector<double> pre_squash;  // u = mean + std * noise
  double log_prob = 0.0;           // log pi(action | state), squash-corrected
};

/// The actor network's output layer is read as [mean | log_std], each of
/// dimension d. log_std is clamped to [kLogStdMin, kLogStdMax] before use.
inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Reparameterized sample: action = tanh(mean + std * noise). `noise` is a
/// standard-normal vector supplied by the caller, which keeps sampling
/// seedable and lets gradients flow through the draw.
PolicySample sample_policy(std::span<const double> net_out, std::span<const double> noise);

/// Deterministic head: action = tanh(mean).
void mean_action(std::span<const double> net_out, std::span<double> action_out);

/// Gradient of  L = kappa * log_prob + f(action)  with respect to the raw
/// network output, at fixed noise. `df_daction` is df/d(action) evaluated at
/// sample.action; pass an empty span for f == 0. Accounts for the squash
/// Jacobian, the reparameterization and log-std clamp saturation. Writes 2d
/// entries into g_net_out (mean block, then log_std block), overwriting.
void policy_backward(std::span<const double> net_out, std::span<const double> noise,
                     const PolicySample& sample, double kappa,
                     std::span<const double> df_daction, std::span<double> g_net_out);

}  // namespace mmg::nn
