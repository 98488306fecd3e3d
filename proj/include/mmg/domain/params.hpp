#pragma once

#include <stdexcept>
#include <string>

namespace mmg::domain {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-microgrid physical and economic constants.
struct MicrogridParams {
  double lambda_mgts = 1.3;   // generator cost coefficient ($/kWh)
  double p_mgts_min = 5.0;    // generator power bounds (kW)
  double p_mgts_max = 30.0;
  double eta_ch = 0.9;        // charge/discharge efficiency, in (0,1]
  double eta_dc = 0.9;
  double p_ch_max = 100.0;    // storage power limits (kW)
  double p_dc_max = 100.0;
  double s_esd_min = 0.0;     // storage capacity bounds (kWh)
  double s_esd_max = 200.0;
  double lambda_b = 0.5;      // storage O&M coefficient ($/kWh)
  double lambda_loss = 1.35;  // loss cost coefficient ($/kWh)
  double psi_mgts = 0.02;     // loss fractions, in [0,1)
  double psi_pv = 0.02;
  double psi_wt = 0.02;
  double ell = 0.5;           // imbalance penalty factor ($/kW^2)
  double p_ig_max = 500.0;    // grid trade limit (kW)
  double p_ij_max = 200.0;    // inter-MG trade limit (kW)

  /// Stock parameter set; generator cost alternates 1.3 / 1.5 by index.
  static MicrogridParams defaults(int mg_index);

  /// Throws ScenarioError naming the offending field (and MG index if >= 0).
  void validate(int mg_index = -1) const;
};

}  // namespace mmg::domain
