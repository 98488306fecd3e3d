#include "mmg/domain/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "mmg/util/csv.hpp"
#include "mmg/util/rng.hpp"

namespace mmg::domain {
namespace {

constexpr double kPi = 3.14159265358979323846;

void check_series(const std::vector<double>& v, int horizon_t, const std::string& what) {
  if (static_cast<int>(v.size()) != horizon_t)
    throw ScenarioError(what + ": expected " + std::to_string(horizon_t) + " entries, got " +
                        std::to_string(v.size()));
  for (std::size_t t = 0; t < v.size(); ++t) {
    if (!std::isfinite(v[t]) || v[t] < 0.0)
      throw ScenarioError(what + ": negative or non-finite value at t=" + std::to_string(t));
  }
}

}  // namespace

void Scenario::validate() const {
  if (n_mg < 2) throw ScenarioError("scenario: n_mg must be >= 2");
  if (horizon_t < 1) throw ScenarioError("scenario: horizon_t must be >= 1");
  if (!std::isfinite(dt) || dt <= 0) throw ScenarioError("scenario: dt must be > 0");
  if (static_cast<int>(params.size()) != n_mg) throw ScenarioError("scenario: params count != n_mg");
  if (static_cast<int>(load.size()) != n_mg || static_cast<int>(p_wt.size()) != n_mg ||
      static_cast<int>(p_pv.size()) != n_mg)
    throw ScenarioError("scenario: series count != n_mg");
  for (int i = 0; i < n_mg; ++i) {
    params[i].validate(i);
    const std::string tag = "mg " + std::to_string(i);
    check_series(load[i], horizon_t, tag + " load");
    check_series(p_wt[i], horizon_t, tag + " wt");
    check_series(p_pv[i], horizon_t, tag + " pv");
  }
  check_series(price_mg, horizon_t, "price_mg");
  check_series(price_grid_buy, horizon_t, "price_grid_buy");
  check_series(price_grid_sell, horizon_t, "price_grid_sell");
  for (int t = 0; t < horizon_t; ++t) {
    if (!(price_grid_sell[t] <= price_mg[t] && price_mg[t] <= price_grid_buy[t]))
      throw ScenarioError("price ordering violated at t=" + std::to_string(t) +
                          ": need price_grid_sell <= price_mg <= price_grid_buy, got " +
                          util::format_f64(price_grid_sell[t]) + " / " +
                          util::format_f64(price_mg[t]) + " / " +
                          util::format_f64(price_grid_buy[t]));
  }
}

Scenario generate_synthetic(std::uint64_t seed, int n_mg, int horizon_t) {
  if (n_mg < 2) throw ScenarioError("generate_synthetic: n_mg must be >= 2");
  if (horizon_t < 1) throw ScenarioError("generate_synthetic: horizon_t must be >= 1");

  Scenario s;
  s.n_mg = n_mg;
  s.horizon_t = horizon_t;
  s.dt = 1.0;
  s.load.resize(n_mg);
  s.p_wt.resize(n_mg);
  s.p_pv.resize(n_mg);
  s.params.reserve(n_mg);

  for (int i = 0; i < n_mg; ++i) {
    util::Rng rng(util::derive_seed(seed, "scenario-mg", static_cast<std::uint64_t>(i)));
    s.params.push_back(MicrogridParams::defaults(i));

    const double base_load = 220.0 + 40.0 * rng.uniform01();
    auto& load = s.load[i];
    auto& wt = s.p_wt[i];
    auto& pv = s.p_pv[i];
    load.resize(horizon_t);
    wt.resize(horizon_t);
    pv.resize(horizon_t);

    double wind_level = 0.5 + 0.3 * rng.uniform01();
    for (int t = 0; t < horizon_t; ++t) {
      const double frac = static_cast<double>(t) / horizon_t;  // position in the day
      // double-peaked demand: morning and evening bumps on a base
      const double shape = 0.65 + 0.30 * std::exp(-36.0 * (frac - 0.35) * (frac - 0.35)) +
                           0.45 * std::exp(-36.0 * (frac - 0.80) * (frac - 0.80));
      load[t] = base_load * shape * (1.0 + 0.04 * rng.normal());
      load[t] = std::max(0.0, load[t]);
      // solar bell centred mid-day
      const double bell = std::max(0.0, std::sin(kPi * std::clamp((frac - 0.25) / 0.5, 0.0, 1.0)));
      pv[t] = 180.0 * bell * std::max(0.0, 1.0 + 0.10 * rng.normal());
      // wind wanders slowly, stronger overnight
      wind_level = std::clamp(wind_level + 0.10 * rng.normal(), 0.15, 1.0);
      const double night_boost = 1.0 + 0.35 * std::cos(2.0 * kPi * frac);
      wt[t] = 140.0 * wind_level * std::max(0.1, night_boost);
    }

    // Rescale renewables so even-indexed MGs run a structural deficit and
    // odd-indexed MGs a surplus over the horizon.
    const double sum_load = std::accumulate(load.begin(), load.end(), 0.0);
    const double sum_ren = std::accumulate(wt.begin(), wt.end(), 0.0) +
                           std::accumulate(pv.begin(), pv.end(), 0.0);
    const double target_ratio = (i % 2 == 0) ? 0.55 : 1.60;
    const double k = sum_ren > 0 ? target_ratio * sum_load / sum_ren : 0.0;
    for (int t = 0; t < horizon_t; ++t) {
      wt[t] *= k;
      pv[t] *= k;
    }
  }

  s.price_mg.resize(horizon_t);
  s.price_grid_buy.resize(horizon_t);
  s.price_grid_sell.resize(horizon_t);
  for (int t = 0; t < horizon_t; ++t) {
    const double frac = static_cast<double>(t) / horizon_t;
    // three-tier day profile: off-peak / shoulder / peak
    double buy, sell;
    const bool peak = (frac >= 10.0 / 24 && frac < 15.0 / 24) || (frac >= 18.0 / 24 && frac < 21.0 / 24);
    const bool off = frac < 7.0 / 24 || frac >= 22.0 / 24;
    if (peak) {
      buy = 1.30;
      sell = 0.40;
    } else if (off) {
      buy = 0.50;
      sell = 0.15;
    } else {
      buy = 0.90;
      sell = 0.25;
    }
    s.price_grid_buy[t] = buy;
    s.price_grid_sell[t] = sell;
    s.price_mg[t] = 0.5 * (buy + sell);
  }

  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// bundle I/O
//
// Layout of a bundle directory:
//   manifest.txt   key = value lines; [mg <k>] sections for per-MG parameters
//   mg<k>.csv      t,load_kw,wt_kw,pv_kw
//   prices.csv     t,price_mg,price_grid_buy,price_grid_sell

namespace {

struct Manifest {
  std::map<std::string, double> global;
  std::vector<std::map<std::string, double>> per_mg;
};

Manifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ScenarioError("cannot open manifest: " + file.string());
  Manifest m;
  std::map<std::string, double>* section = &m.global;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto ctx = [&] { return file.string() + ":" + std::to_string(lineno); };
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.front() == '[') {
      if (line.back() != ']') throw ScenarioError(ctx() + ": malformed section header");
      std::istringstream ss(line.substr(1, line.size() - 2));
      std::string word;
      int idx = -1;
      ss >> word >> idx;
      if (word != "mg" || idx < 0) throw ScenarioError(ctx() + ": expected [mg <index>]");
      if (static_cast<std::size_t>(idx) >= m.per_mg.size()) m.per_mg.resize(idx + 1);
      section = &m.per_mg[idx];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ScenarioError(ctx() + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b2 = s.find_first_not_of(" \t");
      const auto e2 = s.find_last_not_of(" \t");
      s = b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
    };
    trim(key);
    trim(val);
    char* end = nullptr;
    const double v = std::strtod(val.c_str(), &end);
    if (end == val.c_str() || *end != '\0')
      throw ScenarioError(ctx() + ": field '" + key + "': not a number: '" + val + "'");
    (*section)[key] = v;
  }
  return m;
}

double take(std::map<std::string, double>& m, const std::string& key, const std::string& ctx) {
  const auto it = m.find(key);
  if (it == m.end()) throw ScenarioError(ctx + ": missing field '" + key + "'");
  const double v = it->second;
  m.erase(it);
  return v;
}

std::vector<double> take_column(const util::CsvTable& t, const std::string& name,
                                const std::filesystem::path& file, int horizon_t) {
  const int c = t.column(name);
  if (c < 0) throw ScenarioError(file.string() + ": missing column '" + name + "'");
  if (static_cast<int>(t.rows.size()) != horizon_t)
    throw ScenarioError(file.string() + ": expected " + std::to_string(horizon_t) +
                        " data rows (horizon_t), got " + std::to_string(t.rows.size()));
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double x = t.rows[r][c];
    if (!std::isfinite(x) || x < 0.0)
      throw ScenarioError(file.string() + ": row " + std::to_string(r + 2) + ", field '" + name +
                          "': negative or non-finite value " + util::format_f64(x));
    v.push_back(x);
  }
  return v;
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  Manifest man = read_manifest(manifest_path);
  const std::string mctx = manifest_path.string();

  Scenario s;
  s.n_mg = static_cast<int>(take(man.global, "n_mg", mctx));
  s.horizon_t = static_cast<int>(take(man.global, "horizon_t", mctx));
  s.dt = take(man.global, "dt", mctx);
  if (s.n_mg < 2) throw ScenarioError(mctx + ": n_mg must be >= 2");
  if (s.horizon_t < 1) throw ScenarioError(mctx + ": horizon_t must be >= 1");
  if (static_cast<int>(man.per_mg.size()) != s.n_mg)
    throw ScenarioError(mctx + ": expected " + std::to_string(s.n_mg) + " [mg <k>] sections, got " +
                        std::to_string(man.per_mg.size()));

  for (int i = 0; i < s.n_mg; ++i) {
    auto& sec = man.per_mg[i];
    const std::string ctx = mctx + " [mg " + std::to_string(i) + "]";
    MicrogridParams p;
    p.lambda_mgts = take(sec, "lambda_mgts", ctx);
    p.p_mgts_min = take(sec, "p_mgts_min", ctx);
    p.p_mgts_max = take(sec, "p_mgts_max", ctx);
    p.eta_ch = take(sec, "eta_ch", ctx);
    p.eta_dc = take(sec, "eta_dc", ctx);
    p.p_ch_max = take(sec, "p_ch_max", ctx);
    p.p_dc_max = take(sec, "p_dc_max", ctx);
    p.s_esd_min = take(sec, "s_esd_min", ctx);
    p.s_esd_max = take(sec, "s_esd_max", ctx);
    p.lambda_b = take(sec, "lambda_b", ctx);
    p.lambda_loss = take(sec, "lambda_loss", ctx);
    p.psi_mgts = take(sec, "psi_mgts", ctx);
    p.psi_pv = take(sec, "psi_pv", ctx);
    p.psi_wt = take(sec, "psi_wt", ctx);
    p.ell = take(sec, "ell", ctx);
    p.p_ig_max = take(sec, "p_ig_max", ctx);
    p.p_ij_max = take(sec, "p_ij_max", ctx);
    if (!sec.empty()) throw ScenarioError(ctx + ": unknown field '" + sec.begin()->first + "'");
    s.params.push_back(p);
  }

  for (int i = 0; i < s.n_mg; ++i) {
    const auto file = dir / ("mg" + std::to_string(i) + ".csv");
    const auto table = util::read_csv(file);
    s.load.push_back(take_column(table, "load_kw", file, s.horizon_t));
    s.p_wt.push_back(take_column(table, "wt_kw", file, s.horizon_t));
    s.p_pv.push_back(take_column(table, "pv_kw", file, s.horizon_t));
  }
  {
    const auto file = dir / "prices.csv";
    const auto table = util::read_csv(file);
    s.price_mg = take_column(table, "price_mg", file, s.horizon_t);
    s.price_grid_buy = take_column(table, "price_grid_buy", file, s.horizon_t);
    s.price_grid_sell = take_column(table, "price_grid_sell", file, s.horizon_t);
  }

  s.validate();
  return s;
}

void write_scenario(const Scenario& s, const std::filesystem::path& dir) {
  s.validate();
  std::filesystem::create_directories(dir);

  std::ofstream man(dir / "manifest.txt");
  if (!man) throw ScenarioError("cannot write manifest in " + dir.string());
  const auto put = [&](const char* key, double v) { man << key << " = " << util::format_f64(v) << '\n'; };
  put("n_mg", s.n_mg);
  put("horizon_t", s.horizon_t);
  put("dt", s.dt);
  for (int i = 0; i < s.n_mg; ++i) {
    const auto& p = s.params[i];
    man << "\n[mg " << i << "]\n";
    put("lambda_mgts", p.lambda_mgts);
    put("p_mgts_min", p.p_mgts_min);
    put("p_mgts_max", p.p_mgts_max);
    put("eta_ch", p.eta_ch);
    put("eta_dc", p.eta_dc);
    put("p_ch_max", p.p_ch_max);
    put("p_dc_max", p.p_dc_max);
    put("s_esd_min", p.s_esd_min);
    put("s_esd_max", p.s_esd_max);
    put("lambda_b", p.lambda_b);
    put("lambda_loss", p.lambda_loss);
    put("psi_mgts", p.psi_mgts);
    put("psi_pv", p.psi_pv);
    put("psi_wt", p.psi_wt);
    put("ell", p.ell);
    put("p_ig_max", p.p_ig_max);
    put("p_ij_max", p.p_ij_max);
  }
  if (!man) throw ScenarioError("write failed: " + (dir / "manifest.txt").string());

  for (int i = 0; i < s.n_mg; ++i) {
    std::vector<std::vector<double>> rows;
    rows.reserve(s.horizon_t);
    for (int t = 0; t < s.horizon_t; ++t)
      rows.push_back({static_cast<double>(t), s.load[i][t], s.p_wt[i][t], s.p_pv[i][t]});
    util::write_csv(dir / ("mg" + std::to_string(i) + ".csv"),
                    {"t", "load_kw", "wt_kw", "pv_kw"}, rows);
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(s.horizon_t);
  for (int t = 0; t < s.horizon_t; ++t)
    rows.push_back({static_cast<double>(t), s.price_mg[t], s.price_grid_buy[t],
                    s.price_grid_sell[t]});
  util::write_csv(dir / "prices.csv", {"t", "price_mg", "price_grid_buy", "price_grid_sell"},
                  rows);
}

}  // namespace mmg::domain
