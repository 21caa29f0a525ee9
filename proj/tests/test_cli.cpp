#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "catch_amalgamated.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cylbif_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CYLBIF_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump();
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json summary(const fs::path& out) { return json::parse(slurp(out / "summary.json")); }

}  // namespace

TEST_CASE("unknown subcommand and bad configs", "[cli]") {
  const auto dir = scratch("errors");
  CHECK(run_cli("frobnicate --out " + (dir / "o").string()) == 64);
  CHECK(run_cli("morse --config " + (dir / "missing.json").string()) == 2);
  const auto bad = write_config(dir, {{"t_range", {{"t_min", 3.0}, {"t_max", 1.0}}}});
  CHECK(run_cli("morse --config " + bad.string()) == 2);
  std::ofstream(dir / "garbage.json") << "{not json";
  CHECK(run_cli("morse --config " + (dir / "garbage.json").string()) == 2);
}

TEST_CASE("morse with p = 4 reports m_xn = 1", "[cli]") {
  const auto dir = scratch("morse");
  const auto cfg = write_config(dir, {{"model", {{"type", "lane_emden"}, {"p", 4.0}}},
                                      {"random_checks", 20},
                                      {"grids", {{"eig_M", 1000}}}});
  REQUIRE(run_cli("morse --config " + cfg.string() + " --out " + (dir / "a").string() + " --threads 2") == 0);
  const auto s = summary(dir / "a");
  CHECK(s["results"]["m_xn"] == 1);
  CHECK(s["results"]["random_checks"]["agree"] == 20);
  CHECK(s.contains("config_hash"));
  CHECK(s["tolerances"].contains("tol_zero_rel"));
  CHECK(s["grids"]["eig_M"] == 1000);
  CHECK(fs::exists(dir / "a" / "morse.csv"));

  // determinism, independent of the thread count
  REQUIRE(run_cli("morse --config " + cfg.string() + " --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "morse.csv") == slurp(dir / "b" / "morse.csv"));
  CHECK(summary(dir / "b")["config_hash"] == s["config_hash"]);
}

TEST_CASE("base-eigs rows for the unit interval", "[cli]") {
  const auto dir = scratch("base");
  REQUIRE(run_cli("base-eigs --out " + dir.string()) == 0);
  std::ifstream in(dir / "base-eigs.csv");
  std::string header, r0, r1, r2;
  std::getline(in, header);
  std::getline(in, r0);
  std::getline(in, r1);
  std::getline(in, r2);
  CHECK(header == "j,lambda_j,multiplicity,label");
  CHECK(r1.rfind("1,9.8696", 0) == 0);
  CHECK(r2.rfind("2,39.4784", 0) == 0);
}

TEST_CASE("bifurcation-points from synthetic alphas", "[cli]") {
  const auto dir = scratch("bif");
  const auto cfg = write_config(dir, {{"alphas", {-5.0}}, {"t_range", {{"t_max", 5.0}}}});
  REQUIRE(run_cli("bifurcation-points --config " + cfg.string() + " --out " + dir.string()) == 0);
  std::ifstream in(dir / "bifurcation-points.csv");
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const double t = std::stod(line.substr(0, line.find(',')));
    CHECK(std::abs(t - rows * M_PI / std::sqrt(5.0)) < 1e-12);
  }
  CHECK(rows == 3);
}

TEST_CASE("check-f and solve-1d exit codes", "[cli]") {
  const auto dir = scratch("codes");
  const auto weak = write_config(dir, {{"model", {{"type", "lane_emden"}, {"p", 1.5}}}});
  CHECK(run_cli("check-f --config " + weak.string() + " --out " + (dir / "w").string()) == 2);
  CHECK(summary(dir / "w")["results"]["superlinear"] == false);
  CHECK(run_cli("check-f --out " + (dir / "ok").string()) == 0);

  const fs::path narrow = dir / "narrow.json";
  std::ofstream(narrow) << json{{"nodal_n", 3}, {"shooting", {{"amplitude_high", 2.0}}}}.dump();
  CHECK(run_cli("solve-1d --config " + narrow.string() + " --out " + (dir / "n").string()) == 4);
  CHECK(summary(dir / "n")["error"]["kind"].is_string());

  REQUIRE(run_cli("solve-1d --out " + (dir / "s").string()) == 0);
  CHECK(summary(dir / "s")["results"]["nodal_count"] == 1);
  const auto ef = write_config(dir, {{"write_eigenfunctions", true}});
  REQUIRE(run_cli("spectrum-1d --config " + ef.string() + " --out " + (dir / "sp").string()) == 0);
  CHECK(summary(dir / "sp")["results"]["oscillation_ok"] == true);
  CHECK(fs::exists(dir / "sp" / "eigenfunction_1.csv"));
}

TEST_CASE("2D subcommands on a coarse grid", "[cli]") {
  const auto dir = scratch("pde");
  const auto cfg = write_config(dir, {{"model", {{"type", "cubic"}, {"c1", 0.0}, {"c3", 1.0}}},
                                      {"grids", {{"nx", 40}, {"ny", 40}, {"eig_M", 400}}},
                                      {"t_range", {{"t_min", 0.5}, {"t_max", 3.0}}},
                                      {"continuation", {{"steps", 3}, {"backtrack", 2}}}});
  REQUIRE(run_cli("verify-decomposition --config " + cfg.string() + " --out " + (dir / "v").string()) == 0);
  CHECK(summary(dir / "v")["results"]["worst_rel_error"].get<double>() < 0.05);

  REQUIRE(run_cli("continue --config " + cfg.string() + " --out " + (dir / "c").string()) == 0);
  const auto s = summary(dir / "c");
  CHECK(s["results"]["branches"][0]["found"] == true);
  CHECK(s["results"]["reflection_distance"].get<double>() < 1e-6);
  CHECK(fs::exists(dir / "c" / "continue.csv"));
  CHECK(fs::exists(dir / "c" / "branch_plus_0.csv"));
  CHECK(fs::exists(dir / "c" / "branch_minus_2.csv"));

  REQUIRE(run_cli("continue --config " + cfg.string() + " --out " + (dir / "c2").string() + " --threads 2") == 0);
  CHECK(slurp(dir / "c" / "continue.csv") == slurp(dir / "c2" / "continue.csv"));
}
