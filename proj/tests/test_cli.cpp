#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "decoh/cli_config.hpp"
#include "decoh/core.hpp"

using namespace decoh;
namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
  const char* p = std::getenv("DECOH_BIN");
  REQUIRE(p != nullptr);
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = cli_bin() + " " + args + " >" + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("decoh_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

}  // namespace

TEST_CASE("config parser: values, overrides, errors with line numbers") {
  const auto dir = fresh_dir("cfg");
  write_file(dir / "good.cfg",
             "# comment line\n"
             "bath.mass = 2.0\n"
             "bath.temperature=0.5   # inline comment\n"
             "model.kind = hard-sphere\n"
             "model.radius = 1.5\n"
             "grid.count = 4\n");
  const auto cfg = parse_config_file((dir / "good.cfg").string());
  CHECK(cfg.bath_mass == 2.0);
  CHECK(cfg.bath_temperature == 0.5);
  CHECK(cfg.model_kind == "hard-sphere");
  CHECK(cfg.grid_count == 4);

  write_file(dir / "badkey.cfg", "bath.mass = 1.0\nbath.masss = 2.0\n");
  try {
    parse_config_file((dir / "badkey.cfg").string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
  }

  write_file(dir / "badline.cfg", "bath.mass 1.0\n");
  CHECK_THROWS_AS(parse_config_file((dir / "badline.cfg").string()), ConfigError);
  write_file(dir / "badnum.cfg", "bath.mass = abc\n");
  CHECK_THROWS_AS(parse_config_file((dir / "badnum.cfg").string()), ConfigError);

  RunConfig rc;
  apply_config_entry(rc, "quad.refine_tol", "1e-9", 0);
  CHECK(rc.quad.refine_tol == 1e-9);
  CHECK_THROWS_AS(apply_config_entry(rc, "nope", "1", 3), ConfigError);
}

TEST_CASE("config builders") {
  RunConfig rc;
  rc.model_kind = "born-yukawa";
  const auto m = config_model(rc);
  CHECK(std::holds_alternative<BornPotential>(m));
  rc.epsilon = "gallis-fleming";
  CHECK(config_epsilon(rc) == EpsilonMode::GallisFleming);
  rc.epsilon = "bogus";
  CHECK_THROWS_AS(config_epsilon(rc), ConfigError);
  rc.grid_axis = "w";
  CHECK_THROWS_AS(config_axis(rc), ConfigError);
}

TEST_CASE("rate-curve: stable CSV bytes and manifest") {
  const auto dir = fresh_dir("rate");
  const std::string common =
      "rate-curve --out " + (dir / "a").string() +
      " --set grid.count=4 --set grid.max=3 --set quad.refine_tol=1e-6";
  CHECK(run_cli(common, dir / "log1.txt") == 0);

  const auto csv = slurp(dir / "a" / "rate-curve.csv");
  CHECK(csv.rfind("R,F,stderr,route,epsilon\n", 0) == 0);
  CHECK(csv.find("\r") == std::string::npos);  // LF only
  CHECK(csv.find("general") != std::string::npos);
  CHECK(fs::exists(dir / "a" / "rate-curve.manifest.json"));

  // byte-identical on rerun into a second directory
  const std::string second =
      "rate-curve --out " + (dir / "b").string() +
      " --set grid.count=4 --set grid.max=3 --set quad.refine_tol=1e-6";
  CHECK(run_cli(second, dir / "log2.txt") == 0);
  CHECK(slurp(dir / "a" / "rate-curve.csv") == slurp(dir / "b" / "rate-curve.csv"));
}

TEST_CASE("config errors exit 1 with a machine-readable line") {
  const auto dir = fresh_dir("err");
  write_file(dir / "bad.cfg", "bath.mass = 1.0\nunknown.key = 3\n");
  const int rc = run_cli("rate-curve --config " + (dir / "bad.cfg").string() + " --out " +
                             (dir / "out").string(),
                         dir / "log.txt");
  CHECK(rc == 1);
  const auto log = slurp(dir / "log.txt");
  CHECK(log.find("DECOH-ERROR") != std::string::npos);
  CHECK(log.find("kind=config") != std::string::npos);
  CHECK(log.find("line=2") != std::string::npos);
}

TEST_CASE("unreachable tolerance exits 2 as a convergence error") {
  const auto dir = fresh_dir("conv");
  const int rc = run_cli(
      "rate-curve --out " + (dir / "out").string() +
          " --set quad.refine_tol=1e-16 --set grid.count=2 --set grid.max=1",
      dir / "log.txt");
  CHECK(rc == 2);
  const auto log = slurp(dir / "log.txt");
  CHECK(log.find("kind=convergence") != std::string::npos);
}

TEST_CASE("compare-routes reports the 2 pi epsilon factor") {
  const auto dir = fresh_dir("cmp");
  const std::string base =
      " --set grid.count=3 --set grid.min=0.5 --set grid.max=2.5 --set quad.refine_tol=1e-6";
  CHECK(run_cli("compare-routes --epsilon corrected --out " + (dir / "c").string() + base,
                dir / "l1.txt") == 0);
  CHECK(run_cli("compare-routes --epsilon gallis-fleming --out " + (dir / "g").string() + base,
                dir / "l2.txt") == 0);
  const auto cc = slurp(dir / "c" / "compare-routes.csv");
  const auto cg = slurp(dir / "g" / "compare-routes.csv");
  CHECK(cc.find("replacement") != std::string::npos);
  CHECK(cg.find("gallis-fleming") != std::string::npos);

  // general-route values must differ by exactly 2 pi between the two runs
  auto general_values = [](const std::string& body) {
    std::vector<double> vals;
    std::istringstream is(body);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      std::vector<std::string> cells;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (cells.size() >= 4 && cells[3] == "general") vals.push_back(std::stod(cells[1]));
    }
    return vals;
  };
  const auto vc = general_values(cc);
  const auto vg = general_values(cg);
  REQUIRE(vc.size() == vg.size());
  for (std::size_t i = 0; i < vc.size(); ++i)
    CHECK(vg[i] / vc[i] == doctest::Approx(6.283185307179586).epsilon(1e-12));
}

TEST_CASE("eta, gbar, mc-verify, evolve produce their artifacts") {
  const auto dir = fresh_dir("smoke");
  CHECK(run_cli("eta --out " + (dir / "eta").string() +
                    " --set grid.count=3 --set grid.max=4",
                dir / "l1.txt") == 0);
  CHECK(slurp(dir / "eta" / "eta.csv").rfind("R,eta_re,eta_im,abs_eta\n", 0) == 0);

  CHECK(run_cli("gbar --out " + (dir / "gbar").string() + " --set gbar.nq=3 --set gbar.nomega=3",
                dir / "l2.txt") == 0);
  CHECK(slurp(dir / "gbar" / "gbar.csv").rfind("q,omega,gbar_closed,gbar_integral,rel_diff\n", 0) ==
        0);

  const std::string mc = "mc-verify --out " + (dir / "mc").string() +
                         " --set mc.samples=2000 --set grid.count=2 --set grid.min=0.5"
                         " --set grid.max=1 --set quad.refine_tol=1e-6";
  CHECK(run_cli(mc, dir / "l3.txt") == 0);
  const auto mc1 = slurp(dir / "mc" / "mc-verify.csv");
  CHECK(mc1.find("monte-carlo") != std::string::npos);

  // identical seed and config give byte-identical CSV
  const std::string mc2 = "mc-verify --out " + (dir / "mc2").string() +
                          " --set mc.samples=2000 --set grid.count=2 --set grid.min=0.5"
                          " --set grid.max=1 --set quad.refine_tol=1e-6";
  CHECK(run_cli(mc2, dir / "l4.txt") == 0);
  CHECK(mc1 == slurp(dir / "mc2" / "mc-verify.csv"));

  // a different seed changes the Monte Carlo rows
  const std::string mc3 = "mc-verify --seed 99 --out " + (dir / "mc3").string() +
                          " --set mc.samples=2000 --set grid.count=2 --set grid.min=0.5"
                          " --set grid.max=1 --set quad.refine_tol=1e-6";
  CHECK(run_cli(mc3, dir / "l5.txt") == 0);
  CHECK(mc1 != slurp(dir / "mc3" / "mc-verify.csv"));

  CHECK(run_cli("evolve --out " + (dir / "evo").string() +
                    " --set evolve.n=24 --set evolve.snapshots=1 --set quad.refine_tol=1e-6",
                dir / "l6.txt") == 0);
  CHECK(fs::exists(dir / "evo" / "evolve_t0.csv"));
  CHECK(fs::exists(dir / "evo" / "evolve_t1.csv"));
  CHECK(fs::exists(dir / "evo" / "evolve.manifest.json"));
}

TEST_CASE("selfcheck default tier passes") {
  const auto dir = fresh_dir("selfcheck");
  const int rc = run_cli("selfcheck --out " + (dir / "sc").string(), dir / "log.txt");
  const auto log = slurp(dir / "log.txt");
  INFO(log);
  CHECK(rc == 0);
  CHECK(log.find("[FAIL]") == std::string::npos);
  CHECK(log.find("[PASS]") != std::string::npos);
}
