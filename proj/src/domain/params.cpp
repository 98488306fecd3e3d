#include "mmg/domain/params.hpp"

#include <cmath>

namespace mmg::domain {
namespace {

std::string mg_tag(int mg_index) {
  return mg_index >= 0 ? " (mg " + std::to_string(mg_index) + ")" : std::string();
}

void require(bool ok, const char* what, int mg_index) {
  if (!ok) throw ScenarioError(std::string("invalid microgrid parameters") + mg_tag(mg_index) + ": " + what);
}

}  // namespace

MicrogridParams MicrogridParams::defaults(int mg_index) {
  MicrogridParams p;
  p.lambda_mgts = (mg_index % 2 == 0) ? 1.3 : 1.5;
  return p;
}

void MicrogridParams::validate(int mg_index) const {
  const auto fin = [](double v) { return std::isfinite(v); };
  require(fin(lambda_mgts) && lambda_mgts >= 0, "lambda_mgts must be finite and >= 0", mg_index);
  require(fin(p_mgts_min) && fin(p_mgts_max) && 0 <= p_mgts_min && p_mgts_min <= p_mgts_max,
          "need 0 <= p_mgts_min <= p_mgts_max", mg_index);
  require(fin(eta_ch) && eta_ch > 0 && eta_ch <= 1, "eta_ch must be in (0,1]", mg_index);
  require(fin(eta_dc) && eta_dc > 0 && eta_dc <= 1, "eta_dc must be in (0,1]", mg_index);
  require(fin(p_ch_max) && p_ch_max > 0, "p_ch_max must be > 0", mg_index);
  require(fin(p_dc_max) && p_dc_max > 0, "p_dc_max must be > 0", mg_index);
  require(fin(s_esd_min) && fin(s_esd_max) && 0 <= s_esd_min && s_esd_min < s_esd_max,
          "need 0 <= s_esd_min < s_esd_max", mg_index);
  require(fin(lambda_b) && lambda_b >= 0, "lambda_b must be >= 0", mg_index);
  require(fin(lambda_loss) && lambda_loss >= 0, "lambda_loss must be >= 0", mg_index);
  require(fin(psi_mgts) && psi_mgts >= 0 && psi_mgts < 1, "psi_mgts must be in [0,1)", mg_index);
  require(fin(psi_pv) && psi_pv >= 0 && psi_pv < 1, "psi_pv must be in [0,1)", mg_index);
  require(fin(psi_wt) && psi_wt >= 0 && psi_wt < 1, "psi_wt must be in [0,1)", mg_index);
  require(fin(ell) && ell >= 0, "ell must be >= 0", mg_index);
  require(fin(p_ig_max) && p_ig_max >= 0, "p_ig_max must be >= 0", mg_index);
  require(fin(p_ij_max) && p_ij_max >= 0, "p_ij_max must be >= 0", mg_index);
}

}  // namespace mmg::domain
