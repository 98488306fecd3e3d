#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mmg/domain/scenario.hpp"
#include "mmg/masac/env_iface.hpp"
#include "mmg/masac/replay.hpp"
#include "mmg/nn/mlp.hpp"
#include "mmg/util/rng.hpp"

namespace mmg::masac {

struct SacHyperparams {
  double gamma = 0.916;          // discount
  double a_l = 0.0004;           // actor learning rate
  double c_l = 0.0006;           // critic learning rate
  int batch_n = 512;             // mini-batch size
  double kappa = 0.159;          // entropy temperature
  double phi_soft = 0.005;       // target soft-update coefficient
  std::size_t buffer_capacity = 10000;
  int episodes = 1000;
  int steps_per_episode = 0;     // 0 = run to the environment horizon

  void validate() const;
};

enum class SoftUpdateFreq { per_step, per_episode };

struct TrainerOptions {
  std::vector<int> hidden = {128, 128};  // widths shared by actor and critic
  double reward_scale = 1.0;             // applied to rewards entering the buffer
  bool twin_critic = false;
  SoftUpdateFreq soft_update_freq = SoftUpdateFreq::per_step;
  int update_every = 1;                  // gradient updates every k-th env step
};

/// Per-dimension multiplicative observation scaling. Keeps network inputs
/// O(1) without changing the information content.
struct Normalizer {
  std::vector<double> scale;

  void apply(std::span<const double> in, std::span<double> out) const;
  static Normalizer identity(int dim);
  /// Scenario-derived scales: one shared power scale for load/WT/PV, one
  /// shared price scale for the three price entries.
  static Normalizer for_scenario(const domain::Scenario& s);
};

/// Affine map between the policy's squashed (-1,1) outputs and env units.
struct ActionScaler {
  std::vector<std::vector<double>> lo, hi;  // [agent][dim]

  static ActionScaler from_env(const Env& env);
  void to_env(int agent, std::span<const double> squashed, std::span<double> env_units) const;
  void to_squashed(int agent, std::span<const double> env_units, std::span<double> squashed) const;
};

/// One agent's networks. The critic consumes the joint observation/action
/// vector (centralized training); the actor sees only local observations.
struct AgentNets {
  nn::Mlp actor;
  nn::AdamState actor_opt;
  nn::Mlp critic;
  nn::Mlp target_critic;
  nn::AdamState critic_opt;
  bool twin = false;
  nn::Mlp critic2;
  nn::Mlp target_critic2;
  nn::AdamState critic2_opt;
};

struct MasacState {
  std::vector<AgentNets> agents;
  Normalizer norm;
  ActionScaler scaler;
  SacHyperparams hp;
  TrainerOptions opt;
  int n_agents = 0;
  int obs_dim = 0;
  int act_dim = 0;
};

MasacState init_masac(const Env& env, const SacHyperparams& hp, const TrainerOptions& opt,
                      const Normalizer& norm, std::uint64_t seed);

/// Bellman targets w for agent_i over a batch: r_i for terminal entries,
/// else r_i + gamma * (Q_target(x', a') - kappa * log pi_i(a'_i | s'_i)) with
/// one reparameterized next action per agent drawn from the current actors.
std::vector<double> critic_target(int agent_i, std::span<const JointTransition* const> batch,
                                  const MasacState& st, util::Rng& noise_rng);

struct LossGrad {
  double loss = 0;
  std::vector<double> grad;  // w.r.t. the updated network's parameters
};

/// Mean squared Bellman error of agent_i's critic against fixed targets w,
/// with its parameter gradient. Pure (no optimizer step).
LossGrad critic_loss_grad(int agent_i, std::span<const JointTransition* const> batch,
                          const MasacState& st, std::span<const double> w, int which_critic = 0);

/// Actor loss mean(kappa*log pi - Q) with its parameter gradient, consuming
/// one reparameterization noise vector per batch element. Pure.
LossGrad actor_loss_grad(int agent_i, std::span<const JointTransition* const> batch,
                         const MasacState& st, util::Rng& noise_rng);

/// One Adam step on agent_i's critic(s) minimizing the mean squared Bellman
/// error. Returns the pre-update loss.
double critic_update(int agent_i, std::span<const JointTransition* const> batch, MasacState& st,
                     util::Rng& noise_rng);

/// One Adam step on agent_i's actor minimizing
/// mean(kappa * log pi_i(a~_i|s_i) - Q(x, a with slot i <- a~_i)).
/// Returns the pre-update loss.
double actor_update(int agent_i, std::span<const JointTransition* const> batch, MasacState& st,
                    util::Rng& noise_rng);

/// target <- phi_soft * current + (1 - phi_soft) * target, elementwise.
void soft_update(AgentNets& nets, double phi_soft);

struct TrainingReport {
  std::vector<double> episode_total_reward;               // $ (unscaled), summed over agents
  std::vector<std::vector<double>> episode_agent_reward;  // [episode][agent]
  std::vector<double> episode_wall_s;                     // cumulative wall time
  double wall_time_s = 0;
};

/// Full training loop (warm-up with uniform random actions until the buffer
/// holds one batch, then per-step critic/actor updates per agent and soft
/// target updates). Deterministic function of (env, st, seed).
TrainingReport train(Env& env, MasacState& st, std::uint64_t seed);

struct EvalResult {
  int steps = 0;
  double total_reward = 0;            // $ summed over agents and steps
  std::vector<double> agent_reward;   // $
};

/// Distributed-execution rollout: each agent's action depends only on its
/// own observation through its actor (the signature admits nothing else).
/// deterministic=true uses the policy mean.
EvalResult evaluate(Env& env, const std::vector<nn::Mlp>& actors, const Normalizer& norm,
                    const ActionScaler& scaler, bool deterministic, std::uint64_t seed = 0);

/// First episode index after which the `window`-episode moving mean stays
/// within tol*|final mean| of the final mean; -1 if undefined.
int convergence_episode(std::span<const double> totals, int window = 50, double tol = 0.01);

// --- checkpointing ---------------------------------------------------------

struct AgentCheckpoint {
  AgentNets nets;
  Normalizer norm;
  bool esd_in_action = false;
  int obs_dim = 0;
  int act_dim = 0;
};

void save_agent_checkpoint(const std::filesystem::path& file, const AgentNets& nets,
                           const Normalizer& norm, bool esd_in_action, int obs_dim, int act_dim);
AgentCheckpoint load_agent_checkpoint(const std::filesystem::path& file);

}  // namespace mmg::masac
