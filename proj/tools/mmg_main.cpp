// mmg — multi-microgrid dispatch experiments: scenario generation, MASAC
// training, evaluation, mode comparison and hyperparameter tuning.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "../src/cli/commands.hpp"
#include "mmg/domain/params.hpp"
#include "mmg/nn/checkpoint.hpp"
#include "mmg/util/csv.hpp"

namespace {

using namespace mmg;

void add_training_flags(CLI::App* cmd, masac::SacHyperparams& hp, masac::TrainerOptions& opt,
                        std::vector<int>& hidden) {
  cmd->add_option("--episodes", hp.episodes, "Training episodes");
  cmd->add_option("--gamma", hp.gamma, "Discount factor");
  cmd->add_option("--actor-lr", hp.a_l, "Actor learning rate");
  cmd->add_option("--critic-lr", hp.c_l, "Critic learning rate");
  cmd->add_option("--batch", hp.batch_n, "Mini-batch size");
  cmd->add_option("--kappa", hp.kappa, "Entropy temperature");
  cmd->add_option("--phi-soft", hp.phi_soft, "Target soft-update coefficient");
  cmd->add_option("--buffer", hp.buffer_capacity, "Replay buffer capacity");
  cmd->add_option("--steps-per-episode", hp.steps_per_episode,
                  "Step cap per episode (0 = scenario horizon)");
  cmd->add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',');
  cmd->add_option("--reward-scale", opt.reward_scale, "Reward scaling inside the trainer");
  cmd->add_option("--update-every", opt.update_every, "Gradient updates every k-th step");
  cmd->add_flag("--twin-critic", opt.twin_critic, "Train twin critics (min-target)");
  cmd->add_option_function<std::string>(
         "--soft-update",
         [&opt](const std::string& v) {
           if (v == "step")
             opt.soft_update_freq = masac::SoftUpdateFreq::per_step;
           else if (v == "episode")
             opt.soft_update_freq = masac::SoftUpdateFreq::per_episode;
           else
             throw CLI::ValidationError("--soft-update must be 'step' or 'episode'");
         },
         "Soft-update frequency: step|episode")
      ->default_str("step");
}

void add_mode_flag(CLI::App* cmd, bool& isolated) {
  cmd->add_option_function<std::string>(
         "--mode",
         [&isolated](const std::string& v) {
           if (v == "coupled")
             isolated = false;
           else if (v == "isolated")
             isolated = true;
           else
             throw CLI::ValidationError("--mode must be 'coupled' or 'isolated'");
         },
         "Inter-MG trading: coupled|isolated")
      ->default_str("coupled");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"multi-microgrid collaborative dispatch experiments"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic scenario bundle");
  std::uint64_t gen_seed = 7;
  int gen_n_mg = 2, gen_horizon = 24;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--n-mg", gen_n_mg, "Number of microgrids (>= 2)");
  gen->add_option("--horizon", gen_horizon, "Steps per day");
  gen->add_option("--out", gen_out, "Output bundle directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train MASAC on a scenario");
  cli::TrainConfig tc;
  tc.opt.reward_scale = cli::kDefaultRewardScale;
  std::vector<int> train_hidden = tc.opt.hidden;
  std::string train_scenario, train_out, train_hp_file;
  train->add_option("--scenario", train_scenario, "Scenario bundle directory")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--seed", tc.seed, "Master seed");
  train->add_option("--hyperparams", train_hp_file,
                    "JSON file with tuned hyperparameters (from tune)");
  bool no_trace = false;
  train->add_flag("--no-trace", no_trace, "Skip the final evaluation trace CSV");
  train->add_flag("--esd-in-action", tc.esd_in_action, "Expose storage power as an action");
  add_mode_flag(train, tc.isolated);
  add_training_flags(train, tc.hp, tc.opt, train_hidden);

  // eval
  auto* eval = app.add_subcommand("eval", "Roll out trained actors on a scenario");
  cli::EvalConfig ec;
  std::string eval_scenario, eval_ckpt, eval_out;
  bool stochastic = false;
  eval->add_option("--scenario", eval_scenario, "Scenario bundle directory")->required();
  eval->add_option("--checkpoints", eval_ckpt, "Checkpoint directory (train output)")->required();
  eval->add_option("--out", eval_out, "Output directory")->required();
  eval->add_option("--seed", ec.seed, "Seed (stochastic rollouts)");
  eval->add_flag("--stochastic", stochastic, "Sample the policy instead of using its mean");
  add_mode_flag(eval, ec.isolated);

  // compare-modes
  auto* cmp = app.add_subcommand("compare-modes",
                                 "Train and evaluate with trading disabled vs enabled");
  cli::CompareConfig cc;
  cc.opt.reward_scale = cli::kDefaultRewardScale;
  std::vector<int> cmp_hidden = cc.opt.hidden;
  std::string cmp_scenario, cmp_out;
  cmp->add_option("--scenario", cmp_scenario, "Scenario bundle directory")->required();
  cmp->add_option("--out", cmp_out, "Output directory")->required();
  cmp->add_option("--seed", cc.seed, "Master seed (shared by both modes)");
  cmp->add_flag("--esd-in-action", cc.esd_in_action, "Expose storage power as an action");
  add_training_flags(cmp, cc.hp, cc.opt, cmp_hidden);

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "Hyperparameter search over MASAC");
  cli::TuneConfig uc;
  uc.opt.reward_scale = cli::kDefaultRewardScale;
  std::vector<int> tune_hidden = uc.opt.hidden;
  std::string tune_scenario, tune_out;
  tune_cmd->add_option("--scenario", tune_scenario, "Scenario bundle directory")->required();
  tune_cmd->add_option("--out", tune_out, "Output directory")->required();
  tune_cmd->add_option("--seed", uc.seed, "Master seed");
  tune_cmd->add_option("--trials", uc.trials, "Number of trials")->required();
  tune_cmd->add_option("--jobs", uc.tuner.jobs, "Parallel trials (1 = deterministic)");
  tune_cmd->add_option("--bootstrap", uc.tuner.bootstrap, "LHS bootstrap trials");
  tune_cmd->add_option("--candidates", uc.tuner.n_candidates, "Candidates per GP proposal");
  add_training_flags(tune_cmd, uc.base_hp, uc.opt, tune_hidden);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      cli::run_gen_data(gen_seed, gen_n_mg, gen_horizon, gen_out);
      std::cout << "scenario bundle written to " << gen_out << '\n';
    } else if (train->parsed()) {
      if (!train_hp_file.empty()) cli::apply_hyperparams_file(train_hp_file, tc.hp);
      tc.opt.hidden = train_hidden;
      tc.scenario_dir = train_scenario;
      tc.out_dir = train_out;
      tc.emit_trace = !no_trace;
      const auto sum = cli::run_train(tc);
      std::cout << "episodes: " << sum.episodes
                << "\nconvergence_episode: " << sum.convergence_episode
                << "\nconvergence_time_s: " << sum.convergence_time_s
                << "\nwall_time_s: " << sum.wall_time_s
                << "\nfinal_eval_cost: " << sum.final_eval_cost << '\n';
    } else if (eval->parsed()) {
      ec.scenario_dir = eval_scenario;
      ec.checkpoint_dir = eval_ckpt;
      ec.out_dir = eval_out;
      ec.deterministic = !stochastic;
      const auto sum = cli::run_eval(ec);
      std::cout << "steps: " << sum.steps << "\ntotal_cost: " << sum.total_cost
                << "\ntotal_reward: " << sum.total_reward << '\n';
    } else if (cmp->parsed()) {
      cc.opt.hidden = cmp_hidden;
      cc.scenario_dir = cmp_scenario;
      cc.out_dir = cmp_out;
      const auto sum = cli::run_compare_modes(cc);
      std::cout << "Model 1 cost: " << sum.cost_model1 << "\nModel 2 cost: " << sum.cost_model2
                << "\nreduction_pct: " << sum.reduction_pct << '\n';
    } else if (tune_cmd->parsed()) {
      uc.opt.hidden = tune_hidden;
      uc.scenario_dir = tune_scenario;
      uc.out_dir = tune_out;
      const auto sum = cli::run_tune(uc);
      std::cout << "completed: " << sum.completed << "\nfailed: " << sum.failed
                << "\nbest_trial: " << sum.best_trial
                << "\nbest_objective: " << sum.best_objective << '\n';
    }
  } catch (const nn::DivergenceError& e) {
    std::cerr << "error (divergence): " << e.what() << '\n';
    return cli::kDivergence;
  } catch (const domain::ScenarioError& e) {
    std::cerr << "error (data): " << e.what() << '\n';
    return cli::kDataError;
  } catch (const util::CsvError& e) {
    std::cerr << "error (data): " << e.what() << '\n';
    return cli::kDataError;
  } catch (const nn::CheckpointError& e) {
    std::cerr << "error (data): " << e.what() << '\n';
    return cli::kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error (config): " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kInternalError;
  }
  return cli::kOk;
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
