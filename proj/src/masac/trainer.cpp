#include "mmg/masac/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mmg/nn/checkpoint.hpp"
#include "mmg/nn/policy.hpp"

namespace mmg::masac {

void SacHyperparams::validate() const {
  const auto bad = [](const std::string& what) {
    throw std::invalid_argument("SacHyperparams: " + what);
  };
  if (!(gamma >= 0 && gamma < 1)) bad("gamma must be in [0,1)");
  if (!(a_l > 0) || !(c_l > 0)) bad("learning rates must be > 0");
  if (batch_n < 1) bad("batch_n must be >= 1");
  if (static_cast<std::size_t>(batch_n) > buffer_capacity) bad("batch_n must be <= buffer_capacity");
  if (!(kappa >= 0)) bad("kappa must be >= 0");
  if (!(phi_soft > 0 && phi_soft <= 1)) bad("phi_soft must be in (0,1]");
  if (buffer_capacity == 0) bad("buffer_capacity must be > 0");
  if (episodes < 1) bad("episodes must be >= 1");
  if (steps_per_episode < 0) bad("steps_per_episode must be >= 0");
}

void Normalizer::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != scale.size() || out.size() != scale.size())
    throw std::invalid_argument("Normalizer: size mismatch");
  for (std::size_t i = 0; i < scale.size(); ++i) out[i] = in[i] * scale[i];
}

Normalizer Normalizer::identity(int dim) {
  Normalizer n;
  n.scale.assign(dim, 1.0);
  return n;
}

Normalizer Normalizer::for_scenario(const domain::Scenario& s) {
  double pmax = 1.0;
  for (int i = 0; i < s.n_mg; ++i) {
    for (int t = 0; t < s.horizon_t; ++t) {
      pmax = std::max({pmax, s.load[i][t], s.p_wt[i][t], s.p_pv[i][t]});
    }
  }
  double prmax = 0.01;
  for (const double v : s.price_grid_buy) prmax = std::max(prmax, v);
  Normalizer n;
  // field order matches Observation::to_vector
  n.scale = {1.0 / pmax, 1.0, 1.0 / pmax, 1.0 / pmax,
             1.0 / prmax, 1.0 / prmax, 1.0 / prmax, 1.0};
  return n;
}

ActionScaler ActionScaler::from_env(const Env& env) {
  ActionScaler sc;
  const int n = env.n_agents();
  const int d = env.action_dim();
  sc.lo.assign(n, std::vector<double>(d));
  sc.hi.assign(n, std::vector<double>(d));
  for (int i = 0; i < n; ++i) env.action_bounds(i, sc.lo[i], sc.hi[i]);
  return sc;
}

void ActionScaler::to_env(int agent, std::span<const double> squashed,
                          std::span<double> env_units) const {
  const auto& l = lo.at(agent);
  const auto& h = hi.at(agent);
  for (std::size_t k = 0; k < l.size(); ++k) {
    const double c = 0.5 * (l[k] + h[k]);
    const double half = 0.5 * (h[k] - l[k]);
    env_units[k] = c + half * squashed[k];
  }
}

void ActionScaler::to_squashed(int agent, std::span<const double> env_units,
                               std::span<double> squashed) const {
  const auto& l = lo.at(agent);
  const auto& h = hi.at(agent);
  for (std::size_t k = 0; k < l.size(); ++k) {
    const double c = 0.5 * (l[k] + h[k]);
    const double half = 0.5 * (h[k] - l[k]);
    squashed[k] = half < 1e-12 ? 0.0 : std::clamp((env_units[k] - c) / half, -1.0, 1.0);
  }
}

MasacState init_masac(const Env& env, const SacHyperparams& hp, const TrainerOptions& opt,
                      const Normalizer& norm, std::uint64_t seed) {
  hp.validate();
  MasacState st;
  st.hp = hp;
  st.opt = opt;
  st.n_agents = env.n_agents();
  st.obs_dim = env.obs_dim();
  st.act_dim = env.action_dim();
  if (static_cast<int>(norm.scale.size()) != st.obs_dim)
    throw std::invalid_argument("init_masac: normalizer dimension mismatch");
  st.norm = norm;
  st.scaler = ActionScaler::from_env(env);

  std::vector<int> actor_sizes = {st.obs_dim};
  std::vector<int> critic_sizes = {st.n_agents * (st.obs_dim + st.act_dim)};
  for (const int h : opt.hidden) {
    actor_sizes.push_back(h);
    critic_sizes.push_back(h);
  }
  actor_sizes.push_back(2 * st.act_dim);
  critic_sizes.push_back(1);

  st.agents.reserve(st.n_agents);
  for (int i = 0; i < st.n_agents; ++i) {
    util::Rng rng(util::derive_seed(seed, "init", static_cast<std::uint64_t>(i)));
    AgentNets nets;
    nets.actor = nn::Mlp::glorot(actor_sizes, rng);
    {
      // small final layer + moderate initial std keeps early actions centred
      const int last = nets.actor.num_layers() - 1;
      for (double& w : nets.actor.weights(last)) w *= 0.01;
      auto b = nets.actor.biases(last);
      for (int k = st.act_dim; k < 2 * st.act_dim; ++k) b[k] = -0.5;
    }
    nets.critic = nn::Mlp::glorot(critic_sizes, rng);
    nets.target_critic = nets.critic;
    nets.actor_opt = nn::AdamState::for_params(nets.actor.param_count(), hp.a_l);
    nets.critic_opt = nn::AdamState::for_params(nets.critic.param_count(), hp.c_l);
    nets.twin = opt.twin_critic;
    if (opt.twin_critic) {
      nets.critic2 = nn::Mlp::glorot(critic_sizes, rng);
      nets.target_critic2 = nets.critic2;
      nets.critic2_opt = nn::AdamState::for_params(nets.critic2.param_count(), hp.c_l);
    }
    st.agents.push_back(std::move(nets));
  }
  return st;
}

namespace {

/// Reusable per-call scratch. Not thread-safe; each training run owns one.
struct Scratch {
  nn::Workspace ws_actor, ws_critic, ws_aux;
  std::vector<double> critic_in, critic_in_grad, net_grad, obs_buf, act_buf, noise;
  std::vector<double> critic_grad, critic2_grad, actor_grad, discard_grad;
};

int critic_in_dim(const MasacState& st) { return st.n_agents * (st.obs_dim + st.act_dim); }

/// Normalized observations into slots [agent*obs_dim ...), squashed actions
/// into slots [n*obs_dim + agent*act_dim ...).
void put_obs(const MasacState& st, int agent, std::span<const double> obs,
             std::vector<double>& critic_in) {
  st.norm.apply(obs, std::span<double>(critic_in).subspan(agent * st.obs_dim, st.obs_dim));
}

void put_action_squashed(const MasacState& st, int agent, std::span<const double> squashed,
                         std::vector<double>& critic_in) {
  std::copy(squashed.begin(), squashed.end(),
            critic_in.begin() + st.n_agents * st.obs_dim + agent * st.act_dim);
}

void put_action_env(const MasacState& st, int agent, std::span<const double> env_units,
                    std::vector<double>& critic_in, std::vector<double>& tmp) {
  tmp.resize(st.act_dim);
  st.scaler.to_squashed(agent, env_units, tmp);
  put_action_squashed(st, agent, tmp, critic_in);
}

double critic_forward(const nn::Mlp& critic, std::span<const double> in, nn::Workspace& ws) {
  return critic.forward_cached(in, ws)[0];
}

}  // namespace

std::vector<double> critic_target(int agent_i, std::span<const JointTransition* const> batch,
                                  const MasacState& st, util::Rng& noise_rng) {
  const auto& nets = st.agents.at(agent_i);
  Scratch sc;
  sc.critic_in.assign(critic_in_dim(st), 0.0);
  std::vector<double> w(batch.size());

  for (std::size_t e = 0; e < batch.size(); ++e) {
    const JointTransition& tr = *batch[e];
    const double r_i = tr.r.at(agent_i);
    if (tr.done) {
      w[e] = r_i;
      continue;
    }
    double log_pi_i = 0.0;
    for (int j = 0; j < st.n_agents; ++j) {
      put_obs(st, j, tr.x_next[j], sc.critic_in);
      sc.obs_buf.resize(st.obs_dim);
      st.norm.apply(tr.x_next[j], sc.obs_buf);
      const auto net_out = st.agents[j].actor.forward_cached(sc.obs_buf, sc.ws_actor);
      sc.noise.resize(st.act_dim);
      for (auto& z : sc.noise) z = noise_rng.normal();
      const auto sample = nn::sample_policy(net_out, sc.noise);
      if (j == agent_i) log_pi_i = sample.log_prob;
      put_action_squashed(st, j, sample.action, sc.critic_in);
    }
    double q = critic_forward(nets.target_critic, sc.critic_in, sc.ws_critic);
    if (nets.twin)
      q = std::min(q, critic_forward(nets.target_critic2, sc.critic_in, sc.ws_critic));
    w[e] = r_i + st.hp.gamma * (q - st.hp.kappa * log_pi_i);
  }
  return w;
}

LossGrad critic_loss_grad(int agent_i, std::span<const JointTransition* const> batch,
                          const MasacState& st, std::span<const double> w, int which_critic) {
  if (batch.empty()) throw std::invalid_argument("critic_loss_grad: empty batch");
  if (w.size() != batch.size()) throw std::invalid_argument("critic_loss_grad: target size");
  const auto& nets = st.agents.at(agent_i);
  const nn::Mlp& critic = (which_critic == 0) ? nets.critic : nets.critic2;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  Scratch sc;
  sc.critic_in.assign(critic_in_dim(st), 0.0);
  LossGrad lg;
  lg.grad.assign(critic.param_count(), 0.0);
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const JointTransition& tr = *batch[e];
    for (int j = 0; j < st.n_agents; ++j) {
      put_obs(st, j, tr.x[j], sc.critic_in);
      put_action_env(st, j, tr.a[j], sc.critic_in, sc.act_buf);
    }
    const double q = critic_forward(critic, sc.critic_in, sc.ws_critic);
    const double resid = q - w[e];
    lg.loss += 0.5 * resid * resid;
    const double upstream[1] = {resid * inv_n};
    critic.backward(upstream, sc.ws_critic, lg.grad);
  }
  lg.loss *= inv_n;
  return lg;
}

double critic_update(int agent_i, std::span<const JointTransition* const> batch, MasacState& st,
                     util::Rng& noise_rng) {
  const auto w = critic_target(agent_i, batch, st, noise_rng);
  auto& nets = st.agents.at(agent_i);
  double loss1 = 0.0;
  const int n_critics = nets.twin ? 2 : 1;
  for (int c = 0; c < n_critics; ++c) {
    auto lg = critic_loss_grad(agent_i, batch, st, w, c);
    if (!std::isfinite(lg.loss)) throw nn::DivergenceError("critic_update: non-finite loss");
    if (c == 0) loss1 = lg.loss;
    nn::Mlp& critic = (c == 0) ? nets.critic : nets.critic2;
    nn::AdamState& opt = (c == 0) ? nets.critic_opt : nets.critic2_opt;
    nn::adam_update(opt, critic.params(), lg.grad);
  }
  return loss1;
}

LossGrad actor_loss_grad(int agent_i, std::span<const JointTransition* const> batch,
                         const MasacState& st, util::Rng& noise_rng) {
  if (batch.empty()) throw std::invalid_argument("actor_loss_grad: empty batch");
  const auto& nets = st.agents.at(agent_i);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const int n = st.n_agents;

  Scratch sc;
  sc.critic_in.assign(critic_in_dim(st), 0.0);
  sc.critic_in_grad.assign(critic_in_dim(st), 0.0);
  sc.discard_grad.assign(nets.critic.param_count(), 0.0);
  sc.net_grad.assign(2 * st.act_dim, 0.0);

  LossGrad lg;
  lg.grad.assign(nets.actor.param_count(), 0.0);
  for (const JointTransition* trp : batch) {
    const JointTransition& tr = *trp;
    for (int j = 0; j < n; ++j) {
      put_obs(st, j, tr.x[j], sc.critic_in);
      put_action_env(st, j, tr.a[j], sc.critic_in, sc.act_buf);
    }
    sc.obs_buf.resize(st.obs_dim);
    st.norm.apply(tr.x[agent_i], sc.obs_buf);
    const auto net_out = nets.actor.forward_cached(sc.obs_buf, sc.ws_actor);
    sc.noise.resize(st.act_dim);
    for (auto& z : sc.noise) z = noise_rng.normal();
    const auto sample = nn::sample_policy(net_out, sc.noise);
    put_action_squashed(st, agent_i, sample.action, sc.critic_in);

    // pick the critic that attains the min when twins are enabled
    const nn::Mlp* critic = &nets.critic;
    double q;
    if (nets.twin) {
      const double q1 = critic_forward(nets.critic, sc.critic_in, sc.ws_critic);
      const double q2 = critic_forward(nets.critic2, sc.critic_in, sc.ws_aux);
      if (q2 < q1) {
        critic = &nets.critic2;
        q = q2;
        std::swap(sc.ws_critic, sc.ws_aux);  // backward uses the matching cache
      } else {
        q = q1;
      }
    } else {
      q = critic_forward(nets.critic, sc.critic_in, sc.ws_critic);
    }
    lg.loss += st.hp.kappa * sample.log_prob - q;

    // d(-q/N)/d critic input; critic parameters are frozen in this step
    // (their gradient lands in a discard buffer)
    const double upstream[1] = {-inv_n};
    critic->backward(upstream, sc.ws_critic, sc.discard_grad, sc.critic_in_grad);
    const std::span<const double> dq_da =
        std::span<const double>(sc.critic_in_grad)
            .subspan(n * st.obs_dim + agent_i * st.act_dim, st.act_dim);
    nn::policy_backward(net_out, sc.noise, sample, st.hp.kappa * inv_n, dq_da, sc.net_grad);
    nets.actor.backward(sc.net_grad, sc.ws_actor, lg.grad);
  }
  lg.loss *= inv_n;
  return lg;
}

double actor_update(int agent_i, std::span<const JointTransition* const> batch, MasacState& st,
                    util::Rng& noise_rng) {
  auto lg = actor_loss_grad(agent_i, batch, st, noise_rng);
  if (!std::isfinite(lg.loss)) throw nn::DivergenceError("actor_update: non-finite loss");
  auto& nets = st.agents.at(agent_i);
  nn::adam_update(nets.actor_opt, nets.actor.params(), lg.grad);
  return lg.loss;
}

void soft_update(AgentNets& nets, double phi_soft) {
  const auto blend = [phi_soft](const nn::Mlp& cur, nn::Mlp& tgt) {
    const auto c = cur.params();
    auto t = tgt.params();
    for (std::size_t k = 0; k < c.size(); ++k)
      t[k] = phi_soft * c[k] + (1.0 - phi_soft) * t[k];
  };
  blend(nets.critic, nets.target_critic);
  if (nets.twin) blend(nets.critic2, nets.target_critic2);
}

TrainingReport train(Env& env, MasacState& st, std::uint64_t seed) {
  const int n = st.n_agents;
  const int env_h = env.horizon();
  if (env_h < 1) throw std::invalid_argument("train: environment horizon must be >= 1");
  const int H = st.hp.steps_per_episode > 0 ? std::min(st.hp.steps_per_episode, env_h) : env_h;

  ReplayBuffer buffer(st.hp.buffer_capacity);
  util::Rng rng_warmup(util::derive_seed(seed, "warmup"));
  util::Rng rng_policy(util::derive_seed(seed, "policy"));
  util::Rng rng_replay(util::derive_seed(seed, "replay"));
  util::Rng rng_target(util::derive_seed(seed, "target"));
  util::Rng rng_actor(util::derive_seed(seed, "actor"));

  TrainingReport report;
  report.episode_total_reward.reserve(st.hp.episodes);
  report.episode_agent_reward.reserve(st.hp.episodes);
  report.episode_wall_s.reserve(st.hp.episodes);

  Scratch sc;
  std::vector<std::vector<double>> squashed(n, std::vector<double>(st.act_dim));
  std::vector<std::vector<double>> env_actions(n, std::vector<double>(st.act_dim));

  const auto t0 = std::chrono::steady_clock::now();
  long global_step = 0;

  for (int ep = 0; ep < st.hp.episodes; ++ep) {
    try {
      auto obs = env.reset();
      std::vector<double> ep_reward(n, 0.0);
      for (int t = 0; t < H; ++t) {
        const bool warmup = buffer.size() < static_cast<std::size_t>(st.hp.batch_n);
        for (int i = 0; i < n; ++i) {
          if (warmup) {
            for (auto& v : squashed[i]) v = rng_warmup.uniform(-1.0, 1.0);
          } else {
            sc.obs_buf.resize(st.obs_dim);
            st.norm.apply(obs[i], sc.obs_buf);
            const auto net_out = st.agents[i].actor.forward_cached(sc.obs_buf, sc.ws_actor);
            sc.noise.resize(st.act_dim);
            for (auto& z : sc.noise) z = rng_policy.normal();
            const auto sample = nn::sample_policy(net_out, sc.noise);
            squashed[i] = sample.action;
          }
          st.scaler.to_env(i, squashed[i], env_actions[i]);
        }
        auto out = env.step(env_actions);

        JointTransition tr;
        tr.x = obs;
        tr.a = env_actions;
        tr.r.resize(n);
        for (int i = 0; i < n; ++i) {
          tr.r[i] = out.rewards[i] * st.opt.reward_scale;
          ep_reward[i] += out.rewards[i];
        }
        tr.x_next = out.next_obs;
        tr.done = out.done;
        buffer.push(std::move(tr));

        ++global_step;
        if (buffer.size() >= static_cast<std::size_t>(st.hp.batch_n) &&
            global_step % st.opt.update_every == 0) {
          for (int i = 0; i < n; ++i) {
            const auto batch = buffer.sample(st.hp.batch_n, rng_replay);
            critic_update(i, batch, st, rng_target);
            actor_update(i, batch, st, rng_actor);
          }
          if (st.opt.soft_update_freq == SoftUpdateFreq::per_step) {
            for (auto& nets : st.agents) soft_update(nets, st.hp.phi_soft);
          }
        }
        obs = std::move(out.next_obs);
        if (out.done) break;
      }
      if (st.opt.soft_update_freq == SoftUpdateFreq::per_episode &&
          buffer.size() >= static_cast<std::size_t>(st.hp.batch_n)) {
        for (auto& nets : st.agents) soft_update(nets, st.hp.phi_soft);
      }

      double total = 0.0;
      for (const double r : ep_reward) total += r;
      report.episode_total_reward.push_back(total);
      report.episode_agent_reward.push_back(std::move(ep_reward));
      report.episode_wall_s.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } catch (const nn::DivergenceError& e) {
      throw nn::DivergenceError(std::string(e.what()) + " (episode " + std::to_string(ep) + ")",
                                ep);
    }
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

EvalResult evaluate(Env& env, const std::vector<nn::Mlp>& actors, const Normalizer& norm,
                    const ActionScaler& scaler, bool deterministic, std::uint64_t seed) {
  const int n = env.n_agents();
  if (static_cast<int>(actors.size()) != n)
    throw std::invalid_argument("evaluate: one actor per agent required");
  util::Rng rng(util::derive_seed(seed, "eval"));
  nn::Workspace ws;
  std::vector<double> obs_buf(env.obs_dim());
  std::vector<double> noise(env.action_dim());
  std::vector<std::vector<double>> env_actions(n, std::vector<double>(env.action_dim()));
  std::vector<double> squashed(env.action_dim());

  EvalResult res;
  res.agent_reward.assign(n, 0.0);
  auto obs = env.reset();
  bool done = false;
  while (!done && res.steps < env.horizon()) {
    for (int i = 0; i < n; ++i) {
      norm.apply(obs[i], obs_buf);
      const auto net_out = actors[i].forward_cached(obs_buf, ws);
      if (deterministic) {
        nn::mean_action(net_out, squashed);
      } else {
        for (auto& z : noise) z = rng.normal();
        squashed = nn::sample_policy(net_out, noise).action;
      }
      scaler.to_env(i, squashed, env_actions[i]);
    }
    auto out = env.step(env_actions);
    for (int i = 0; i < n; ++i) {
      res.agent_reward[i] += out.rewards[i];
      res.total_reward += out.rewards[i];
    }
    obs = std::move(out.next_obs);
    done = out.done;
    ++res.steps;
  }
  return res;
}

int convergence_episode(std::span<const double> totals, int window, double tol) {
  const int e_count = static_cast<int>(totals.size());
  if (e_count < window || window < 1) return -1;
  std::vector<double> moving;
  moving.reserve(e_count - window + 1);
  double acc = 0.0;
  for (int k = 0; k < e_count; ++k) {
    acc += totals[k];
    if (k >= window) acc -= totals[k - window];
    if (k >= window - 1) moving.push_back(acc / window);
  }
  const double final_mean = moving.back();
  const double thresh = tol * std::max(std::fabs(final_mean), 1e-12);
  int first = static_cast<int>(moving.size()) - 1;
  while (first > 0 && std::fabs(moving[first - 1] - final_mean) <= thresh) --first;
  // moving[k] ends at episode k + window - 1 (0-based); report 1-based episode
  return first + window;
}

// --- checkpointing ---------------------------------------------------------

namespace {
constexpr char kMagic[9] = "MMGAGENT";
constexpr std::uint64_t kVersion = 1;
}  // namespace

void save_agent_checkpoint(const std::filesystem::path& file, const AgentNets& nets,
                           const Normalizer& norm, bool esd_in_action, int obs_dim,
                           int act_dim) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw nn::CheckpointError("cannot write checkpoint: " + file.string());
  out.write(kMagic, 8);
  nn::write_u64(out, kVersion);
  nn::write_u64(out, nets.twin ? 1 : 0);
  nn::write_u64(out, esd_in_action ? 1 : 0);
  nn::write_u64(out, static_cast<std::uint64_t>(obs_dim));
  nn::write_u64(out, static_cast<std::uint64_t>(act_dim));
  nn::write_f64_array(out, norm.scale);
  nn::write_mlp(out, nets.actor);
  nn::write_adam(out, nets.actor_opt);
  nn::write_mlp(out, nets.critic);
  nn::write_mlp(out, nets.target_critic);
  nn::write_adam(out, nets.critic_opt);
  if (nets.twin) {
    nn::write_mlp(out, nets.critic2);
    nn::write_mlp(out, nets.target_critic2);
    nn::write_adam(out, nets.critic2_opt);
  }
  if (!out) throw nn::CheckpointError("write failed: " + file.string());
}

AgentCheckpoint load_agent_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw nn::CheckpointError("cannot open checkpoint: " + file.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string_view(magic, 8) != std::string_view(kMagic, 8))
    throw nn::CheckpointError("not an agent checkpoint: " + file.string());
  if (nn::read_u64(in) != kVersion)
    throw nn::CheckpointError("unsupported checkpoint version: " + file.string());
  AgentCheckpoint ck;
  ck.nets.twin = nn::read_u64(in) != 0;
  ck.esd_in_action = nn::read_u64(in) != 0;
  ck.obs_dim = static_cast<int>(nn::read_u64(in));
  ck.act_dim = static_cast<int>(nn::read_u64(in));
  ck.norm.scale = nn::read_f64_array(in);
  ck.nets.actor = nn::read_mlp(in);
  ck.nets.actor_opt = nn::read_adam(in);
  ck.nets.critic = nn::read_mlp(in);
  ck.nets.target_critic = nn::read_mlp(in);
  ck.nets.critic_opt = nn::read_adam(in);
  if (ck.nets.twin) {
    ck.nets.critic2 = nn::read_mlp(in);
    ck.nets.target_critic2 = nn::read_mlp(in);
    ck.nets.critic2_opt = nn::read_adam(in);
  }
  return ck;
}

}  // namespace mmg::masac
