#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mmg/env/environment.hpp"
#include "mmg/nn/checkpoint.hpp"
#include "mmg/util/csv.hpp"

namespace mmg::cli {

using json = nlohmann::json;

namespace {

void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

json hp_to_json(const masac::SacHyperparams& hp) {
  return json{{"gamma", hp.gamma},
              {"a_l", hp.a_l},
              {"c_l", hp.c_l},
              {"batch_n", hp.batch_n},
              {"kappa", hp.kappa},
              {"phi_soft", hp.phi_soft},
              {"buffer_capacity", hp.buffer_capacity},
              {"episodes", hp.episodes},
              {"steps_per_episode", hp.steps_per_episode}};
}

void write_reward_csvs(const std::filesystem::path& out_dir,
                       const masac::TrainingReport& report, int n_agents) {
  std::vector<std::string> base_header = {"episode", "total_reward"};
  for (int i = 0; i < n_agents; ++i) base_header.push_back("reward_" + std::to_string(i));

  std::vector<std::vector<double>> rows;
  rows.reserve(report.episode_total_reward.size());
  for (std::size_t e = 0; e < report.episode_total_reward.size(); ++e) {
    std::vector<double> row = {static_cast<double>(e + 1), report.episode_total_reward[e]};
    for (const double r : report.episode_agent_reward[e]) row.push_back(r);
    rows.push_back(std::move(row));
  }
  // rewards.csv carries no timing, so identical seeds give identical bytes
  util::write_csv(out_dir / "rewards.csv", base_header, rows);

  auto timed_header = base_header;
  timed_header.push_back("wall_time_s");
  for (std::size_t e = 0; e < rows.size(); ++e) rows[e].push_back(report.episode_wall_s[e]);
  util::write_csv(out_dir / "training_report.csv", timed_header, rows);
}

double trace_total_cost(const std::vector<env::StepResult>& trace) {
  double total = 0;
  for (const auto& r : trace)
    for (const auto& c : r.cost) total += c.total;
  return total;
}

void write_trace(const std::filesystem::path& file, const env::MmgEnv& e) {
  util::write_csv(file, env::trace_csv_header(e.scenario().n_mg),
                  env::trace_csv_rows(e.scenario(), e.trace()));
}

struct TrainedRun {
  masac::MasacState st;
  masac::TrainingReport report;
};

TrainedRun train_on_scenario(const domain::Scenario& scenario, const masac::SacHyperparams& hp,
                             const masac::TrainerOptions& opt, const env::EnvOptions& env_opt,
                             std::uint64_t seed) {
  env::MmgEnv env(scenario, env_opt);
  const auto norm = masac::Normalizer::for_scenario(scenario);
  TrainedRun run{masac::init_masac(env, hp, opt, norm, seed), {}};
  run.report = masac::train(env, run.st, seed);
  return run;
}

}  // namespace

double training_objective(const masac::TrainingReport& report) {
  const auto& totals = report.episode_total_reward;
  if (totals.empty()) throw std::runtime_error("training_objective: empty report");
  const std::size_t window = std::min<std::size_t>(50, totals.size());
  double acc = 0;
  for (std::size_t e = totals.size() - window; e < totals.size(); ++e) acc += totals[e];
  return acc / static_cast<double>(window);
}

void apply_hyperparams_file(const std::filesystem::path& file, masac::SacHyperparams& hp) {
  std::ifstream in(file);
  if (!in) throw domain::ScenarioError("cannot open hyperparameters file: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw domain::ScenarioError(file.string() + ": " + e.what());
  }
  if (j.contains("gamma")) hp.gamma = j["gamma"].get<double>();
  if (j.contains("a_l")) hp.a_l = j["a_l"].get<double>();
  if (j.contains("c_l")) hp.c_l = j["c_l"].get<double>();
  if (j.contains("batch_n")) hp.batch_n = j["batch_n"].get<int>();
  if (j.contains("kappa")) hp.kappa = j["kappa"].get<double>();
}

void run_gen_data(std::uint64_t seed, int n_mg, int horizon, const std::filesystem::path& out) {
  const auto scenario = domain::generate_synthetic(seed, n_mg, horizon);
  domain::write_scenario(scenario, out);
}

TrainSummary run_train(const TrainConfig& cfg) {
  const auto scenario = domain::load_scenario(cfg.scenario_dir);
  std::filesystem::create_directories(cfg.out_dir);

  env::EnvOptions env_opt;
  env_opt.trading_enabled = !cfg.isolated;
  env_opt.esd_in_action = cfg.esd_in_action;

  auto run = train_on_scenario(scenario, cfg.hp, cfg.opt, env_opt, cfg.seed);
  write_reward_csvs(cfg.out_dir, run.report, scenario.n_mg);

  const auto ckpt_dir = cfg.out_dir / "checkpoints";
  std::filesystem::create_directories(ckpt_dir);
  for (int i = 0; i < scenario.n_mg; ++i) {
    masac::save_agent_checkpoint(ckpt_dir / ("agent_" + std::to_string(i) + ".ckpt"),
                                 run.st.agents[i], run.st.norm, env_opt.esd_in_action,
                                 run.st.obs_dim, run.st.act_dim);
  }

  // deterministic rollout with the trained actors
  env::MmgEnv eval_env(scenario, env_opt);
  std::vector<nn::Mlp> actors;
  for (const auto& a : run.st.agents) actors.push_back(a.actor);
  const auto eval =
      masac::evaluate(eval_env, actors, run.st.norm, run.st.scaler, /*deterministic=*/true);
  if (cfg.emit_trace) write_trace(cfg.out_dir / "trace.csv", eval_env);

  TrainSummary sum;
  sum.episodes = static_cast<int>(run.report.episode_total_reward.size());
  sum.convergence_episode = masac::convergence_episode(run.report.episode_total_reward);
  if (sum.convergence_episode > 0)
    sum.convergence_time_s = run.report.episode_wall_s.at(sum.convergence_episode - 1);
  sum.wall_time_s = run.report.wall_time_s;
  sum.final_eval_cost = trace_total_cost(eval_env.trace());
  sum.final_eval_reward = eval.total_reward;
  sum.last50_mean_total_reward = training_objective(run.report);

  write_json(cfg.out_dir / "summary.json",
             json{{"episodes", sum.episodes},
                  {"convergence_episode", sum.convergence_episode},
                  {"convergence_time_s", sum.convergence_time_s},
                  {"wall_time_s", sum.wall_time_s},
                  {"final_eval_cost", sum.final_eval_cost},
                  {"final_eval_reward", sum.final_eval_reward},
                  {"last50_mean_total_reward", sum.last50_mean_total_reward},
                  {"seed", cfg.seed},
                  {"mode", cfg.isolated ? "isolated" : "coupled"},
                  {"hyperparams", hp_to_json(cfg.hp)}});
  return sum;
}

EvalSummary run_eval(const EvalConfig& cfg) {
  const auto scenario = domain::load_scenario(cfg.scenario_dir);
  std::filesystem::create_directories(cfg.out_dir);

  std::vector<nn::Mlp> actors;
  masac::Normalizer norm;
  bool esd_in_action = false;
  for (int i = 0; i < scenario.n_mg; ++i) {
    const auto file = cfg.checkpoint_dir / ("agent_" + std::to_string(i) + ".ckpt");
    auto ck = masac::load_agent_checkpoint(file);
    if (i == 0) {
      norm = ck.norm;
      esd_in_action = ck.esd_in_action;
    }
    actors.push_back(std::move(ck.nets.actor));
  }

  env::EnvOptions env_opt;
  env_opt.trading_enabled = !cfg.isolated;
  env_opt.esd_in_action = esd_in_action;
  env::MmgEnv env(scenario, env_opt);
  if (static_cast<int>(norm.scale.size()) != env.obs_dim())
    throw nn::CheckpointError("checkpoint incompatible with scenario: observation dimension");
  if (actors[0].in_dim() != env.obs_dim() || actors[0].out_dim() != 2 * env.action_dim())
    throw nn::CheckpointError("checkpoint incompatible with scenario: network shape");

  const auto scaler = masac::ActionScaler::from_env(env);
  const auto eval = masac::evaluate(env, actors, norm, scaler, cfg.deterministic, cfg.seed);
  write_trace(cfg.out_dir / "trace.csv", env);

  EvalSummary sum;
  sum.total_cost = trace_total_cost(env.trace());
  sum.total_reward = eval.total_reward;
  sum.steps = eval.steps;
  write_json(cfg.out_dir / "eval_summary.json",
             json{{"total_cost", sum.total_cost},
                  {"total_reward", sum.total_reward},
                  {"steps", sum.steps},
                  {"deterministic", cfg.deterministic},
                  {"mode", cfg.isolated ? "isolated" : "coupled"}});
  return sum;
}

CompareSummary run_compare_modes(const CompareConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  CompareSummary sum;
  for (const bool isolated : {true, false}) {
    TrainConfig tc;
    tc.scenario_dir = cfg.scenario_dir;
    tc.out_dir = cfg.out_dir / (isolated ? "mode1" : "mode2");
    tc.seed = cfg.seed;
    tc.hp = cfg.hp;
    tc.opt = cfg.opt;
    tc.isolated = isolated;
    tc.esd_in_action = cfg.esd_in_action;
    const auto ts = run_train(tc);
    (isolated ? sum.cost_model1 : sum.cost_model2) = ts.final_eval_cost;
  }
  sum.reduction_pct = sum.cost_model1 != 0
                          ? 100.0 * (sum.cost_model1 - sum.cost_model2) / sum.cost_model1
                          : 0.0;

  std::ofstream out(cfg.out_dir / "compare_modes.csv");
  if (!out) throw std::runtime_error("cannot write compare_modes.csv");
  out << "model,cost_usd\n";
  out << "Model 1," << util::format_f64(sum.cost_model1) << '\n';
  out << "Model 2," << util::format_f64(sum.cost_model2) << '\n';

  write_json(cfg.out_dir / "compare_modes.json",
             json{{"cost_model1", sum.cost_model1},
                  {"cost_model2", sum.cost_model2},
                  {"reduction_pct", sum.reduction_pct},
                  {"seed", cfg.seed}});
  return sum;
}

TuneSummary run_tune(const TuneConfig& cfg) {
  const auto scenario = domain::load_scenario(cfg.scenario_dir);
  const auto trials_dir = cfg.out_dir / "trials";
  std::filesystem::create_directories(trials_dir);

  const tune::Objective objective = [&](const masac::SacHyperparams& hp, std::uint64_t seed) {
    env::EnvOptions env_opt;  // tuning always runs the coupled system
    const auto run = train_on_scenario(scenario, hp, cfg.opt, env_opt, seed);
    return training_objective(run.report);
  };

  const auto result =
      tune::run_trials(cfg.space, cfg.trials, objective, cfg.seed, cfg.tuner, cfg.base_hp);

  TuneSummary sum;
  std::vector<std::vector<double>> csv_rows;
  for (const auto& rec : result.records) {
    const bool ok = rec.status == tune::TrialRecord::Status::completed;
    (ok ? sum.completed : sum.failed) += 1;
    write_json(trials_dir / ("trial_" + std::to_string(rec.trial_id) + ".json"),
               json{{"trial_id", rec.trial_id},
                    {"hyperparams", hp_to_json(rec.hp)},
                    {"objective", ok ? json(rec.objective) : json()},
                    {"seed", rec.seed},
                    {"wall_time_s", rec.wall_time_s},
                    {"status", ok ? "completed" : "failed"},
                    {"error", rec.error}});
    csv_rows.push_back({static_cast<double>(rec.trial_id), rec.hp.gamma, rec.hp.a_l, rec.hp.c_l,
                        static_cast<double>(rec.hp.batch_n), rec.hp.kappa,
                        ok ? rec.objective : std::numeric_limits<double>::quiet_NaN()});
  }
  util::write_csv(cfg.out_dir / "trials.csv",
                  {"trial_id", "gamma", "a_l", "c_l", "batch_n", "kappa", "objective"}, csv_rows);

  const auto& best = result.best();
  sum.best_trial = best.trial_id;
  sum.best_hp = best.hp;
  sum.best_objective = best.objective;
  write_json(cfg.out_dir / "best_hyperparams.json",
             json{{"trial_id", best.trial_id},
                  {"objective", best.objective},
                  {"seed", best.seed},
                  {"gamma", best.hp.gamma},
                  {"a_l", best.hp.a_l},
                  {"c_l", best.hp.c_l},
                  {"batch_n", best.hp.batch_n},
                  {"kappa", best.hp.kappa}});
  return sum;
}

}  // namespace mmg::cli
