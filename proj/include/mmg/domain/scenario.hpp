#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mmg/domain/params.hpp"

namespace mmg::domain {

/// A dispatch problem instance: per-MG time series, price schedules and
/// parameters over a horizon of `horizon_t` steps of length `dt` hours.
/// Immutable after construction/loading; safe to share across threads.
struct Scenario {
  int n_mg = 0;
  int horizon_t = 0;
  double dt = 1.0;
  std::vector<std::vector<double>> load;  // [mg][t], kW
  std::vector<std::vector<double>> p_wt;  // [mg][t], kW
  std::vector<std::vector<double>> p_pv;  // [mg][t], kW
  std::vector<double> price_mg;           // [t], $/kWh
  std::vector<double> price_grid_buy;     // [t], $/kWh
  std::vector<double> price_grid_sell;    // [t], $/kWh
  std::vector<MicrogridParams> params;    // [mg]

  /// Full invariant check: series lengths, finite non-negative values and
  /// the price ordering sell <= mg <= buy at every step. Throws
  /// ScenarioError with file/row/field context where applicable.
  void validate() const;
};

/// Deterministic synthetic scenario: day-shaped load, PV bell, noisy wind,
/// three-tier prices. Even-indexed MGs run a net deficit over the horizon,
/// odd-indexed MGs a net surplus. Requires n_mg >= 2, horizon_t >= 1.
Scenario generate_synthetic(std::uint64_t seed, int n_mg, int horizon_t);

/// Reads a scenario bundle directory: manifest.txt, mg<k>.csv per MG and
/// prices.csv. Validates every invariant before returning.
Scenario load_scenario(const std::filesystem::path& dir);

/// Writes the same bundle, bit-reproducibly (load_scenario(write_scenario(s))
/// reproduces s exactly).
void write_scenario(const Scenario& s, const std::filesystem::path& dir);

}  // namespace mmg::domain
