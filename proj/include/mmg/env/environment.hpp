#pragma once

#include <span>
#include <vector>

#include "mmg/domain/scenario.hpp"
#include "mmg/masac/env_iface.hpp"

namespace mmg::env {

using domain::MicrogridParams;
using domain::Scenario;

/// Per-step, per-MG cost components in $. `total` is always the exact sum
/// of the six terms.
struct CostBreakdown {
  double mgts_cost = 0;
  double mg_trade_cost = 0;
  double grid_trade_cost = 0;
  double esd_om_cost = 0;
  double loss_cost = 0;
  double imbalance_penalty = 0;
  double total = 0;
};

struct StorageState {
  double s_esd = 0;  // kWh
};

/// What one agent observes at a step (all local quantities).
struct Observation {
  double p_load = 0;
  double soc = 0;
  double p_wt = 0;
  double p_pv = 0;
  double price_mg = 0;
  double price_grid_buy = 0;
  double price_grid_sell = 0;
  double t_of_day = 0;  // normalized step index in [0,1)

  static constexpr int kDim = 8;
  void to_vector(std::span<double> out) const;
};

/// One agent's decision. p_ij has one entry per MG (own index held at 0);
/// positive entries buy from that MG, negative sell. p_ig positive buys
/// from the grid. p_esd is only honoured when the environment runs with
/// esd_in_action (positive = charge request).
struct AgentAction {
  double p_mgts = 0;
  std::vector<double> p_ij;
  double p_ig = 0;
  double p_esd = 0;
};

struct StepResult {
  int t = 0;
  bool done = false;
  std::vector<Observation> next_obs;
  std::vector<double> reward;                       // $, = -cost.total
  std::vector<CostBreakdown> cost;
  std::vector<std::vector<double>> realized_trade;  // antisymmetric [i][j], kW
  std::vector<double> realized_grid;                // kW
  std::vector<double> esd_charge;                   // kW, >= 0
  std::vector<double> esd_discharge;                // kW, >= 0
  std::vector<double> p_loss;                       // kW
  std::vector<double> p_gap;                        // kW
  std::vector<double> p_mgts;                       // kW (realized = requested)
  std::vector<double> soc_after;                    // dimensionless
};

// --- closed-form pieces of the cost model -------------------------------

/// lambda_mgts * p; p must lie in [p_mgts_min, p_mgts_max].
double mgts_cost(const MicrogridParams& p, double p_mgts);

/// Storage transition s' = s + (eta_ch*p_ch - p_dc/eta_dc)*dt.
/// Power and resulting capacity bounds are enforced (callers pre-clip via
/// clip_esd; violations throw).
StorageState esd_step(StorageState s, double p_ch, double p_dc, const MicrogridParams& p,
                      double dt);

double soc(StorageState s, const MicrogridParams& p);

/// (p_ch + p_dc) * lambda_b, both arguments >= 0.
double esd_om_cost(double p_ch, double p_dc, const MicrogridParams& p);

/// price_mg * sum_j realized_trade[j]; positive = expense, negative = revenue.
double mg_trade_cost(double price_mg, std::span<const double> realized_trade_row);

/// Buys at price_buy (p_ig >= 0), sells at price_sell (p_ig < 0, revenue).
double grid_trade_cost(double price_buy, double price_sell, double p_ig);

/// psi_mgts*p_mgts + psi_pv*p_pv + psi_wt*p_wt.
double power_loss(const MicrogridParams& p, double p_mgts, double p_pv, double p_wt);

/// Reconciles independently chosen trade requests into an exactly
/// antisymmetric matrix: for each pair, opposite-signed requests realize the
/// smaller magnitude, anything else realizes zero.
std::vector<std::vector<double>> clear_trades(const std::vector<std::vector<double>>& desired);

struct EsdDispatch {
  double p_ch = 0;
  double p_dc = 0;
  double leftover = 0;  // residual not absorbed; becomes the power gap
};

/// Rule-based storage dispatch: surplus residual charges and deficit
/// residual discharges, each limited by the power rating and the capacity
/// headroom/availability. At most one of p_ch/p_dc is nonzero.
EsdDispatch clip_esd(double residual, StorageState s, const MicrogridParams& p, double dt);

double power_gap(double p_sup, double p_con);

/// reward = -cost.total.
double step_reward(const CostBreakdown& cost);

// --- the environment ------------------------------------------------------

struct EnvOptions {
  bool trading_enabled = true;   // false = isolated mode, inter-MG trades forced to 0
  bool esd_in_action = false;    // expose storage power as an action dimension
};

/// Time-stepped multi-microgrid environment. One instance is single-
/// threaded; independent instances share nothing but the (immutable)
/// scenario.
class MmgEnv final : public masac::Env {
public:
  explicit MmgEnv(Scenario scenario, EnvOptions options = {});

  // masac::Env
  int n_agents() const override { return scenario_.n_mg; }
  int obs_dim() const override { return Observation::kDim; }
  int action_dim() const override;
  void action_bounds(int agent, std::span<double> lo, std::span<double> hi) const override;
  int horizon() const override { return scenario_.horizon_t; }
  std::vector<std::vector<double>> reset() override;
  masac::StepOutcome step(const std::vector<std::vector<double>>& env_actions) override;

  // typed API
  std::vector<Observation> reset_obs();
  StepResult step_actions(const std::vector<AgentAction>& actions);

  AgentAction action_from_vector(int agent, std::span<const double> v) const;

  const Scenario& scenario() const { return scenario_; }
  const EnvOptions& options() const { return options_; }
  int current_step() const { return t_; }
  bool done() const { return t_ >= scenario_.horizon_t; }

  /// Step results accumulated since the last reset (feeds trace CSVs).
  const std::vector<StepResult>& trace() const { return trace_; }

private:
  Observation observe(int agent, int t) const;

  Scenario scenario_;
  EnvOptions options_;
  std::vector<StorageState> storage_;
  std::vector<StepResult> trace_;
  int t_ = 0;
  bool started_ = false;
};

/// Flattens an episode trace into CSV rows (one per (t, MG)), matching
/// trace_csv_header(). n_mg fixes the per-row trade column count.
std::vector<std::string> trace_csv_header(int n_mg);
std::vector<std::vector<double>> trace_csv_rows(const Scenario& s,
                                                const std::vector<StepResult>& trace);

}  // namespace mmg::env
