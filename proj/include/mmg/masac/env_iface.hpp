#pragma once

#include <span>
#include <vector>

namespace mmg::masac {

struct StepOutcome {
  std::vector<std::vector<double>> next_obs;  // per agent
  std::vector<double> rewards;                // per agent
  bool done = false;
};

/// The trainer-facing environment contract. Agents act on flat observation
/// vectors; actions are given in environment units inside the per-dimension
/// box bounds. Implementations must be deterministic given their own state.
class Env {
public:
  virtual ~Env() = default;

  virtual int n_agents() const = 0;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;

  /// Inclusive env-unit bounds per action dimension of `agent`.
  virtual void action_bounds(int agent, std::span<double> lo, std::span<double> hi) const = 0;

  virtual int horizon() const = 0;

  virtual std::vector<std::vector<double>> reset() = 0;
  virtual StepOutcome step(const std::vector<std::vector<double>>& env_actions) = 0;
};

}  // namespace mmg::masac
