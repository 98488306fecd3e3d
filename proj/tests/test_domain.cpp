#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "mmg/domain/scenario.hpp"
#include "mmg/util/csv.hpp"

namespace domain = mmg::domain;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mmg_domain_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("synthetic generation is a pure function of the seed") {
  const auto a = domain::generate_synthetic(7, 2, 24);
  const auto b = domain::generate_synthetic(7, 2, 24);
  CHECK(a.load == b.load);
  CHECK(a.p_wt == b.p_wt);
  CHECK(a.p_pv == b.p_pv);
  CHECK(a.price_mg == b.price_mg);
  const auto c = domain::generate_synthetic(8, 2, 24);
  CHECK(a.load != c.load);
}

TEST_CASE("synthetic scenarios pair a deficit MG with a surplus MG") {
  for (const std::uint64_t seed : {7ull, 1ull, 99ull}) {
    const auto s = domain::generate_synthetic(seed, 2, 24);
    const auto sum = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0);
    };
    CHECK(sum(s.load[0]) > sum(s.p_wt[0]) + sum(s.p_pv[0]));
    CHECK(sum(s.load[1]) < sum(s.p_wt[1]) + sum(s.p_pv[1]));
  }
}

TEST_CASE("synthetic generation rejects a single microgrid") {
  CHECK_THROWS_AS(domain::generate_synthetic(7, 1, 24), domain::ScenarioError);
  CHECK_THROWS_AS(domain::generate_synthetic(7, 2, 0), domain::ScenarioError);
}

TEST_CASE("generated scenarios satisfy the price ordering at every step") {
  const auto s = domain::generate_synthetic(3, 3, 48);
  for (int t = 0; t < s.horizon_t; ++t) {
    CHECK(s.price_grid_sell[t] <= s.price_mg[t]);
    CHECK(s.price_mg[t] <= s.price_grid_buy[t]);
  }
}

TEST_CASE("bundle write/load round-trips bit-identically") {
  TempDir tmp;
  const auto s = domain::generate_synthetic(7, 2, 24);
  domain::write_scenario(s, tmp.path / "b1");
  const auto loaded = domain::load_scenario(tmp.path / "b1");
  CHECK(loaded.n_mg == s.n_mg);
  CHECK(loaded.horizon_t == s.horizon_t);
  CHECK(loaded.dt == s.dt);
  CHECK(loaded.load == s.load);
  CHECK(loaded.p_wt == s.p_wt);
  CHECK(loaded.p_pv == s.p_pv);
  CHECK(loaded.price_mg == s.price_mg);
  CHECK(loaded.price_grid_buy == s.price_grid_buy);
  CHECK(loaded.price_grid_sell == s.price_grid_sell);
  for (int i = 0; i < s.n_mg; ++i) {
    CHECK(loaded.params[i].lambda_mgts == s.params[i].lambda_mgts);
    CHECK(loaded.params[i].eta_ch == s.params[i].eta_ch);
    CHECK(loaded.params[i].p_ij_max == s.params[i].p_ij_max);
  }

  // writing the loaded scenario again reproduces the files byte-for-byte
  domain::write_scenario(loaded, tmp.path / "b2");
  for (const char* name : {"manifest.txt", "mg0.csv", "mg1.csv", "prices.csv"}) {
    std::ifstream f1(tmp.path / "b1" / name), f2(tmp.path / "b2" / name);
    const std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(c1 == c2);
  }
}

TEST_CASE("default synthetic scenario carries the stock parameters") {
  const auto s = domain::generate_synthetic(7, 2, 24);
  CHECK(s.n_mg == 2);
  CHECK(s.params[0].lambda_mgts == 1.3);
  CHECK(s.params[1].lambda_mgts == 1.5);
  CHECK(s.params[0].lambda_b == 0.5);
  CHECK(s.params[0].lambda_loss == 1.35);
  CHECK(s.params[0].psi_mgts == 0.02);
  CHECK(s.params[0].psi_pv == 0.02);
  CHECK(s.params[0].psi_wt == 0.02);
  CHECK(s.params[0].ell == 0.5);
  CHECK(s.params[0].eta_ch == 0.9);
  CHECK(s.params[0].s_esd_max == 200.0);
  CHECK(s.params[0].p_ch_max == 100.0);
  CHECK(s.params[0].p_mgts_min == 5.0);
  CHECK(s.params[0].p_mgts_max == 30.0);
  CHECK(s.params[0].p_ig_max == 500.0);
  CHECK(s.params[0].p_ij_max == 200.0);
}

TEST_CASE("price-ordering violation is reported with the offending step") {
  TempDir tmp;
  auto s = domain::generate_synthetic(7, 2, 24);
  domain::write_scenario(s, tmp.path / "b");
  // corrupt prices.csv: raise price_mg above price_grid_buy at t=3
  auto table = mmg::util::read_csv(tmp.path / "b" / "prices.csv");
  table.rows[3][1] = table.rows[3][2] + 1.0;
  mmg::util::write_csv(tmp.path / "b" / "prices.csv", table.header, table.rows);
  try {
    domain::load_scenario(tmp.path / "b");
    FAIL("expected ScenarioError");
  } catch (const domain::ScenarioError& e) {
    CHECK(std::string(e.what()).find("t=3") != std::string::npos);
  }
}

TEST_CASE("row-count mismatch is reported with the file") {
  TempDir tmp;
  auto s = domain::generate_synthetic(7, 2, 24);
  domain::write_scenario(s, tmp.path / "b");
  auto table = mmg::util::read_csv(tmp.path / "b" / "mg1.csv");
  table.rows.pop_back();  // 23 rows against horizon_t = 24
  mmg::util::write_csv(tmp.path / "b" / "mg1.csv", table.header, table.rows);
  try {
    domain::load_scenario(tmp.path / "b");
    FAIL("expected ScenarioError");
  } catch (const domain::ScenarioError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("mg1.csv") != std::string::npos);
    CHECK(msg.find("24") != std::string::npos);
    CHECK(msg.find("23") != std::string::npos);
  }
}

TEST_CASE("negative power values are rejected with row and field context") {
  TempDir tmp;
  auto s = domain::generate_synthetic(7, 2, 24);
  domain::write_scenario(s, tmp.path / "b");
  auto table = mmg::util::read_csv(tmp.path / "b" / "mg0.csv");
  table.rows[5][1] = -10.0;
  mmg::util::write_csv(tmp.path / "b" / "mg0.csv", table.header, table.rows);
  try {
    domain::load_scenario(tmp.path / "b");
    FAIL("expected ScenarioError");
  } catch (const domain::ScenarioError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("mg0.csv") != std::string::npos);
    CHECK(msg.find("load_kw") != std::string::npos);
  }
}

TEST_CASE("missing manifest fields are reported by name") {
  TempDir tmp;
  auto s = domain::generate_synthetic(7, 2, 24);
  domain::write_scenario(s, tmp.path / "b");
  // drop the last lambda_b line (mg 1 section)
  std::ifstream in(tmp.path / "b" / "manifest.txt");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto pos = content.rfind("lambda_b");
  content.erase(pos, content.find('\n', pos) - pos + 1);
  std::ofstream out(tmp.path / "b" / "manifest.txt");
  out << content;
  out.close();
  try {
    domain::load_scenario(tmp.path / "b");
    FAIL("expected ScenarioError");
  } catch (const domain::ScenarioError& e) {
    CHECK(std::string(e.what()).find("lambda_b") != std::string::npos);
  }
}

TEST_CASE("missing bundle directory fails cleanly") {
  CHECK_THROWS_AS(domain::load_scenario("/nonexistent/bundle"), domain::ScenarioError);
}

TEST_CASE("parameter invariants are enforced") {
  domain::MicrogridParams p = domain::MicrogridParams::defaults(0);
  p.eta_ch = 1.2;
  CHECK_THROWS_AS(p.validate(), domain::ScenarioError);
  p = domain::MicrogridParams::defaults(0);
  p.s_esd_min = p.s_esd_max;
  CHECK_THROWS_AS(p.validate(), domain::ScenarioError);
  p = domain::MicrogridParams::defaults(0);
  p.psi_wt = 1.0;
  CHECK_THROWS_AS(p.validate(), domain::ScenarioError);
  CHECK_NOTHROW(domain::MicrogridParams::defaults(1).validate());
}
