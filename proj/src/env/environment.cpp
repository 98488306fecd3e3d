#include "mmg/env/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mmg::env {
namespace {

constexpr double kTol = 1e-9;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void Observation::to_vector(std::span<double> out) const {
  require(out.size() == kDim, "Observation::to_vector: size mismatch");
  out[0] = p_load;
  out[1] = soc;
  out[2] = p_wt;
  out[3] = p_pv;
  out[4] = price_mg;
  out[5] = price_grid_buy;
  out[6] = price_grid_sell;
  out[7] = t_of_day;
}

double mgts_cost(const MicrogridParams& p, double p_mgts) {
  require(p_mgts >= p.p_mgts_min - kTol && p_mgts <= p.p_mgts_max + kTol,
          "mgts_cost: power " + std::to_string(p_mgts) + " outside [" +
              std::to_string(p.p_mgts_min) + ", " + std::to_string(p.p_mgts_max) + "]");
  return p.lambda_mgts * p_mgts;
}

StorageState esd_step(StorageState s, double p_ch, double p_dc, const MicrogridParams& p,
                      double dt) {
  require(p_ch >= -kTol && p_ch <= p.p_ch_max + kTol, "esd_step: charge power out of bounds");
  require(p_dc >= -kTol && p_dc <= p.p_dc_max + kTol, "esd_step: discharge power out of bounds");
  const double next = s.s_esd + (p.eta_ch * p_ch - p_dc / p.eta_dc) * dt;
  require(next >= p.s_esd_min - 1e-6 && next <= p.s_esd_max + 1e-6,
          "esd_step: capacity bound violated (pre-clip with clip_esd)");
  return {std::clamp(next, p.s_esd_min, p.s_esd_max)};
}

double soc(StorageState s, const MicrogridParams& p) { return s.s_esd / p.s_esd_max; }

double esd_om_cost(double p_ch, double p_dc, const MicrogridParams& p) {
  require(p_ch >= 0 && p_dc >= 0, "esd_om_cost: powers must be >= 0");
  return (p_ch + p_dc) * p.lambda_b;
}

double mg_trade_cost(double price_mg, std::span<const double> realized_trade_row) {
  double sum = 0;
  for (const double v : realized_trade_row) sum += v;
  return price_mg * sum;
}

double grid_trade_cost(double price_buy, double price_sell, double p_ig) {
  return p_ig >= 0 ? price_buy * p_ig : price_sell * p_ig;
}

double power_loss(const MicrogridParams& p, double p_mgts, double p_pv, double p_wt) {
  return p.psi_mgts * p_mgts + p.psi_pv * p_pv + p.psi_wt * p_wt;
}

std::vector<std::vector<double>> clear_trades(const std::vector<std::vector<double>>& desired) {
  const std::size_t n = desired.size();
  std::vector<std::vector<double>> realized(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dij = desired[i][j];
      const double dji = desired[j][i];
      // a trade happens only when one side buys what the other sells
      if (dij * dji < 0.0) {
        const double m = std::min(std::fabs(dij), std::fabs(dji));
        realized[i][j] = dij > 0 ? m : -m;
        realized[j][i] = -realized[i][j];
      }
    }
  }
  return realized;
}

EsdDispatch clip_esd(double residual, StorageState s, const MicrogridParams& p, double dt) {
  EsdDispatch d;
  if (residual > 0) {
    const double headroom = std::max(0.0, p.s_esd_max - s.s_esd);
    d.p_ch = std::min({residual, p.p_ch_max, headroom / (p.eta_ch * dt)});
    d.leftover = residual - d.p_ch;
  } else if (residual < 0) {
    const double available = std::max(0.0, s.s_esd - p.s_esd_min);
    d.p_dc = std::min({-residual, p.p_dc_max, available * p.eta_dc / dt});
    d.leftover = residual + d.p_dc;
  }
  return d;
}

double power_gap(double p_sup, double p_con) { return p_sup - p_con; }

double step_reward(const CostBreakdown& cost) { return -cost.total; }

// ---------------------------------------------------------------------------

MmgEnv::MmgEnv(Scenario scenario, EnvOptions options)
    : scenario_(std::move(scenario)), options_(options) {
  scenario_.validate();
}

int MmgEnv::action_dim() const {
  return 1 + (scenario_.n_mg - 1) + 1 + (options_.esd_in_action ? 1 : 0);
}

void MmgEnv::action_bounds(int agent, std::span<double> lo, std::span<double> hi) const {
  const int d = action_dim();
  require(static_cast<int>(lo.size()) == d && static_cast<int>(hi.size()) == d,
          "action_bounds: size mismatch");
  const auto& p = scenario_.params.at(agent);
  int k = 0;
  lo[k] = p.p_mgts_min;
  hi[k] = p.p_mgts_max;
  ++k;
  for (int j = 0; j < scenario_.n_mg; ++j) {
    if (j == agent) continue;
    lo[k] = -p.p_ij_max;
    hi[k] = p.p_ij_max;
    ++k;
  }
  lo[k] = -p.p_ig_max;
  hi[k] = p.p_ig_max;
  ++k;
  if (options_.esd_in_action) {
    lo[k] = -p.p_dc_max;
    hi[k] = p.p_ch_max;
  }
}

AgentAction MmgEnv::action_from_vector(int agent, std::span<const double> v) const {
  require(static_cast<int>(v.size()) == action_dim(), "action_from_vector: size mismatch");
  AgentAction a;
  a.p_ij.assign(scenario_.n_mg, 0.0);
  int k = 0;
  a.p_mgts = v[k++];
  for (int j = 0; j < scenario_.n_mg; ++j) {
    if (j == agent) continue;
    a.p_ij[j] = v[k++];
  }
  a.p_ig = v[k++];
  if (options_.esd_in_action) a.p_esd = v[k];
  return a;
}

Observation MmgEnv::observe(int agent, int t) const {
  const int idx = std::min(t, scenario_.horizon_t - 1);
  Observation o;
  o.p_load = scenario_.load[agent][idx];
  o.soc = storage_[agent].s_esd / scenario_.params[agent].s_esd_max;
  o.p_wt = scenario_.p_wt[agent][idx];
  o.p_pv = scenario_.p_pv[agent][idx];
  o.price_mg = scenario_.price_mg[idx];
  o.price_grid_buy = scenario_.price_grid_buy[idx];
  o.price_grid_sell = scenario_.price_grid_sell[idx];
  o.t_of_day = static_cast<double>(idx) / scenario_.horizon_t;
  return o;
}

std::vector<Observation> MmgEnv::reset_obs() {
  storage_.clear();
  for (const auto& p : scenario_.params) storage_.push_back({p.s_esd_min});
  t_ = 0;
  started_ = true;
  trace_.clear();
  std::vector<Observation> obs;
  obs.reserve(scenario_.n_mg);
  for (int i = 0; i < scenario_.n_mg; ++i) obs.push_back(observe(i, 0));
  return obs;
}

std::vector<std::vector<double>> MmgEnv::reset() {
  const auto typed = reset_obs();
  std::vector<std::vector<double>> out(typed.size(), std::vector<double>(Observation::kDim));
  for (std::size_t i = 0; i < typed.size(); ++i) typed[i].to_vector(out[i]);
  return out;
}

StepResult MmgEnv::step_actions(const std::vector<AgentAction>& actions) {
  require(started_, "step: reset() must be called first");
  require(t_ < scenario_.horizon_t, "step: episode already done");
  const int n = scenario_.n_mg;
  require(static_cast<int>(actions.size()) == n, "step: one action per agent required");

  // validate actions against their boxes
  std::vector<std::vector<double>> desired(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    const auto& p = scenario_.params[i];
    const auto& a = actions[i];
    require(static_cast<int>(a.p_ij.size()) == n, "step: p_ij must have n_mg entries");
    require(std::fabs(a.p_ij[i]) <= kTol, "step: self-trade entry must be zero");
    require(a.p_mgts >= p.p_mgts_min - 1e-6 && a.p_mgts <= p.p_mgts_max + 1e-6,
            "step: p_mgts out of bounds for mg " + std::to_string(i));
    require(std::fabs(a.p_ig) <= p.p_ig_max + 1e-6, "step: p_ig out of bounds for mg " + std::to_string(i));
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      require(std::fabs(a.p_ij[j]) <= p.p_ij_max + 1e-6,
              "step: p_ij out of bounds for mg " + std::to_string(i));
      desired[i][j] = options_.trading_enabled ? a.p_ij[j] : 0.0;
    }
  }

  const auto realized = clear_trades(desired);
  const bool final_step = (t_ == scenario_.horizon_t - 1);

  StepResult res;
  res.t = t_;
  res.realized_trade = realized;
  res.reward.resize(n);
  res.cost.resize(n);
  res.realized_grid.resize(n);
  res.esd_charge.resize(n);
  res.esd_discharge.resize(n);
  res.p_loss.resize(n);
  res.p_gap.resize(n);
  res.p_mgts.resize(n);
  res.soc_after.resize(n);

  for (int i = 0; i < n; ++i) {
    const auto& p = scenario_.params[i];
    const auto& a = actions[i];
    const double load = scenario_.load[i][t_];
    const double wt = scenario_.p_wt[i][t_];
    const double pv = scenario_.p_pv[i][t_];
    const double loss = power_loss(p, a.p_mgts, pv, wt);

    double trade_sum = 0;
    for (int j = 0; j < n; ++j) trade_sum += realized[i][j];

    // bus balance before storage: supply minus demand
    const double residual = a.p_mgts + wt + pv + trade_sum + a.p_ig - load - loss;

    double p_ch = 0, p_dc = 0, leftover = residual;
    if (final_step) {
      // Drive storage to s_esd_min within the power rating; whatever the
      // forced discharge dumps on the bus lands in the gap term.
      p_dc = std::min(p.p_dc_max, std::max(0.0, storage_[i].s_esd - p.s_esd_min) * p.eta_dc /
                                      scenario_.dt);
      leftover = residual + p_dc;
    } else if (options_.esd_in_action) {
      if (a.p_esd >= 0) {
        const double headroom = std::max(0.0, p.s_esd_max - storage_[i].s_esd);
        p_ch = std::min({a.p_esd, p.p_ch_max, headroom / (p.eta_ch * scenario_.dt)});
        leftover = residual - p_ch;
      } else {
        const double available = std::max(0.0, storage_[i].s_esd - p.s_esd_min);
        p_dc = std::min({-a.p_esd, p.p_dc_max, available * p.eta_dc / scenario_.dt});
        leftover = residual + p_dc;
      }
    } else {
      const auto d = clip_esd(residual, storage_[i], p, scenario_.dt);
      p_ch = d.p_ch;
      p_dc = d.p_dc;
      leftover = d.leftover;
    }

    const double gap = leftover;
    CostBreakdown c;
    c.mgts_cost = mgts_cost(p, a.p_mgts);
    c.mg_trade_cost = mg_trade_cost(scenario_.price_mg[t_], realized[i]);
    c.grid_trade_cost =
        grid_trade_cost(scenario_.price_grid_buy[t_], scenario_.price_grid_sell[t_], a.p_ig);
    c.esd_om_cost = esd_om_cost(p_ch, p_dc, p);
    c.loss_cost = p.lambda_loss * loss;
    c.imbalance_penalty = p.ell * gap * gap;
    c.total = c.mgts_cost + c.mg_trade_cost + c.grid_trade_cost + c.esd_om_cost + c.loss_cost +
              c.imbalance_penalty;

    storage_[i] = esd_step(storage_[i], p_ch, p_dc, p, scenario_.dt);

    res.cost[i] = c;
    res.reward[i] = step_reward(c);
    res.realized_grid[i] = a.p_ig;
    res.esd_charge[i] = p_ch;
    res.esd_discharge[i] = p_dc;
    res.p_loss[i] = loss;
    res.p_gap[i] = gap;
    res.p_mgts[i] = a.p_mgts;
    res.soc_after[i] = storage_[i].s_esd / p.s_esd_max;
  }

  t_ += 1;
  res.done = (t_ >= scenario_.horizon_t);
  res.next_obs.reserve(n);
  for (int i = 0; i < n; ++i) res.next_obs.push_back(observe(i, t_));
  trace_.push_back(res);
  return res;
}

masac::StepOutcome MmgEnv::step(const std::vector<std::vector<double>>& env_actions) {
  const int n = scenario_.n_mg;
  require(static_cast<int>(env_actions.size()) == n, "step: one action per agent required");
  std::vector<AgentAction> typed;
  typed.reserve(n);
  for (int i = 0; i < n; ++i) typed.push_back(action_from_vector(i, env_actions[i]));
  const StepResult res = step_actions(typed);

  masac::StepOutcome out;
  out.done = res.done;
  out.rewards = res.reward;
  out.next_obs.assign(n, std::vector<double>(Observation::kDim));
  for (int i = 0; i < n; ++i) res.next_obs[i].to_vector(out.next_obs[i]);
  return out;
}

std::vector<std::string> trace_csv_header(int n_mg) {
  std::vector<std::string> h = {"t", "mg", "load_kw", "wt_kw", "pv_kw", "p_mgts_kw"};
  for (int j = 0; j < n_mg; ++j) h.push_back("trade_kw_" + std::to_string(j));
  for (const char* s : {"grid_kw", "esd_charge_kw", "esd_discharge_kw", "soc", "p_loss_kw",
                        "p_gap_kw", "mgts_cost", "mg_trade_cost", "grid_trade_cost",
                        "esd_om_cost", "loss_cost", "imbalance_penalty", "total_cost", "reward"})
    h.push_back(s);
  return h;
}

std::vector<std::vector<double>> trace_csv_rows(const Scenario& s,
                                                const std::vector<StepResult>& trace) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.size() * s.n_mg);
  for (const auto& r : trace) {
    for (int i = 0; i < s.n_mg; ++i) {
      std::vector<double> row = {static_cast<double>(r.t), static_cast<double>(i),
                                 s.load[i][r.t],           s.p_wt[i][r.t],
                                 s.p_pv[i][r.t],           r.p_mgts[i]};
      for (int j = 0; j < s.n_mg; ++j) row.push_back(r.realized_trade[i][j]);
      const auto& c = r.cost[i];
      for (const double v : {r.realized_grid[i], r.esd_charge[i], r.esd_discharge[i],
                             r.soc_after[i], r.p_loss[i], r.p_gap[i], c.mgts_cost,
                             c.mg_trade_cost, c.grid_trade_cost, c.esd_om_cost, c.loss_cost,
                             c.imbalance_penalty, c.total, r.reward[i]})
        row.push_back(v);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace mmg::env
