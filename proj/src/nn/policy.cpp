#include "mmg/nn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmg::nn {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)
constexpr double kActionEps = 1e-12;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// log(1 - tanh(u)^2), evaluated without forming 1 - tanh^2.
double log1m_tanh2(double u) {
  return 2.0 * (0.6931471805599453 - u - softplus(-2.0 * u));
}

}  // namespace

PolicySample sample_policy(std::span<const double> net_out, std::span<const double> noise) {
  if (net_out.size() % 2 != 0 || net_out.size() / 2 != noise.size())
    throw std::invalid_argument("sample_policy: net_out must be [mean|log_std], noise of half size");
  const std::size_t d = noise.size();
  PolicySample s;
  s.action.resize(d);
  s.pre_squash.resize(d);
  double lp = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double mean = net_out[k];
    const double log_std = std::clamp(net_out[d + k], kLogStdMin, kLogStdMax);
    const double std_dev = std::exp(log_std);
    const double u = mean + std_dev * noise[k];
    s.pre_squash[k] = u;
    s.action[k] = std::clamp(std::tanh(u), -1.0 + kActionEps, 1.0 - kActionEps);
    // Gaussian density of u under (mean, std), reparameterized, minus the
    // tanh Jacobian correction.
    lp += -0.5 * noise[k] * noise[k] - log_std - kHalfLog2Pi - log1m_tanh2(u);
  }
  s.log_prob = lp;
  return s;
}

void mean_action(std::span<const double> net_out, std::span<double> action_out) {
  const std::size_t d = net_out.size() / 2;
  if (action_out.size() != d) throw std::invalid_argument("mean_action: size mismatch");
  for (std::size_t k = 0; k < d; ++k)
    action_out[k] = std::clamp(std::tanh(net_out[k]), -1.0 + kActionEps, 1.0 - kActionEps);
}

void policy_backward(std::span<const double> net_out, std::span<const double> noise,
                     const PolicySample& sample, double kappa,
                     std::span<const double> df_daction, std::span<double> g_net_out) {
  const std::size_t d = noise.size();
  if (g_net_out.size() != 2 * d || net_out.size() != 2 * d)
    throw std::invalid_argument("policy_backward: size mismatch");
  if (!df_daction.empty() && df_daction.size() != d)
    throw std::invalid_argument("policy_backward: df_daction size mismatch");

  for (std::size_t k = 0; k < d; ++k) {
    const double raw_log_std = net_out[d + k];
    const bool saturated = raw_log_std < kLogStdMin || raw_log_std > kLogStdMax;
    const double log_std = std::clamp(raw_log_std, kLogStdMin, kLogStdMax);
    const double std_dev = std::exp(log_std);
    const double a = sample.action[k];
    const double f_term = df_daction.empty() ? 0.0 : df_daction[k];

    // d/du of [kappa * log_prob + f(tanh(u))]:
    //   d log_prob / du = 2 tanh(u)   (from the squash correction)
    //   d f / du        = f'(a) * (1 - a^2)
    const double dL_du = kappa * 2.0 * a + f_term * (1.0 - a * a);
    g_net_out[k] = dL_du;                                      // du/dmean = 1
    double g_log_std = dL_du * std_dev * noise[k]              // du/dlog_std = std*eps
                       + kappa * (-1.0);                       // explicit -log_std term
    if (saturated) g_log_std = 0.0;
    g_net_out[d + k] = g_log_std;
  }
}

}  // namespace mmg::nn
