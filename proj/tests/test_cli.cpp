#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "evoctrl/config.hpp"
#include "evoctrl/runner.hpp"

using namespace evoctrl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_string(const std::string& text, const std::string& command, const std::string& out_dir,
               std::optional<std::uint64_t> seed = {}) {
  RunOptions opts;
  opts.command = command;
  opts.config_path = "<inline>";
  opts.out_dir = out_dir;
  opts.seed = seed;
  return run(Config::parse_string(text), opts);
}

}  // namespace

TEST_CASE("config parser") {
  const Config cfg = Config::parse_string(
      "# comment\n"
      "[problem]\n"
      "name = scalar-toy   # trailing comment\n"
      "T = 2.5\n"
      "[command]\n"
      "seed = 9\n"
      "list = 1.0 -2 3e-1\n");
  CHECK(cfg.get_string("problem", "name") == "scalar-toy");
  CHECK(cfg.get_double("problem", "T") == 2.5);
  CHECK(cfg.get_int("command", "seed") == 9);
  const auto list = cfg.get_doubles("command", "list");
  REQUIRE(list.size() == 3);
  CHECK(list[1] == -2.0);
  CHECK(cfg.get_double_or("problem", "missing", 7.0) == 7.0);
  CHECK_THROWS_WITH_AS(cfg.get_double("problem", "name"),
                       doctest::Contains("problem.name"), ConfigError);
  CHECK_THROWS_WITH_AS(cfg.get_string("problem", "absent"),
                       doctest::Contains("problem.absent"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("[unclosed\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("keyonly\n"), ConfigError);
}

TEST_CASE("oracle command writes artifacts and gates on the expected value") {
  const std::string text =
      "[problem]\nname = scalar-toy\n"
      "[oracle]\nn_steps = 4\ngrid_points = 5\ngrid_lo = -1\ngrid_hi = 1\n"
      "expected_value = -0.5\ntolerance = 1e-9\n";
  CHECK(run_string(text, "oracle", "cli_out_oracle") == kExitPass);
  const std::string manifest = slurp("cli_out_oracle/manifest.txt");
  CHECK(manifest.find("oracle_value: -0.5") != std::string::npos);
  CHECK(manifest.find("status: pass") != std::string::npos);
  std::filesystem::remove_all("cli_out_oracle");
}

TEST_CASE("configuration failures exit with code 2 and name the field") {
  SUBCASE("negative epsilon") {
    const std::string text =
        "[problem]\nname = vintage-nondegenerate\n"
        "[convolve-probe]\nmode = lem3\nepsilon = -1e-2\n";
    CHECK(run_string(text, "convolve-probe", "cli_out_eps") == kExitConfigError);
  }
  SUBCASE("unknown problem name") {
    CHECK(run_string("[problem]\nname = mystery\n", "oracle", "cli_out_unknown") ==
          kExitConfigError);
  }
  SUBCASE("unknown command") {
    CHECK(run_string("[problem]\nname = scalar-toy\n", "meditate", "cli_out_cmd") ==
          kExitConfigError);
  }
  SUBCASE("command name mismatch") {
    const std::string text =
        "[problem]\nname = scalar-toy\n[command]\nname = oracle\n";
    CHECK(run_string(text, "dp-check", "cli_out_mismatch") == kExitConfigError);
  }
  for (const auto* dir : {"cli_out_eps", "cli_out_unknown", "cli_out_cmd", "cli_out_mismatch"})
    std::filesystem::remove_all(dir);
}

TEST_CASE("failed checks exit with code 1") {
  const std::string text =
      "[problem]\nname = scalar-toy\n"
      "[oracle]\nn_steps = 2\ngrid_points = 3\ngrid_lo = -1\ngrid_hi = 1\n"
      "expected_value = 123.0\ntolerance = 1e-9\n";
  CHECK(run_string(text, "oracle", "cli_out_fail") == kExitCheckFailed);
  CHECK(slurp("cli_out_fail/manifest.txt").find("status: fail") != std::string::npos);
  std::filesystem::remove_all("cli_out_fail");
}

TEST_CASE("identical config and seed give byte-identical csv artifacts") {
  const std::string text =
      "[problem]\nname = vintage-nondegenerate\n"
      "[dp-check]\nt = 0.0\nx_alpha = -1\ncontrols = 10\npieces = 4\ntolerance = 1e-3\n";
  CHECK(run_string(text, "dp-check", "cli_det_a", 7) == kExitPass);
  CHECK(run_string(text, "dp-check", "cli_det_b", 7) == kExitPass);
  CHECK(slurp("cli_det_a/gaps.csv") == slurp("cli_det_b/gaps.csv"));
  // a different seed changes the sampled controls
  CHECK(run_string(text, "dp-check", "cli_det_c", 8) == kExitPass);
  CHECK(slurp("cli_det_a/gaps.csv") != slurp("cli_det_c/gaps.csv"));
  for (const auto* dir : {"cli_det_a", "cli_det_b", "cli_det_c"})
    std::filesystem::remove_all(dir);
}

TEST_CASE("simulate zero control on the degenerate instance") {
  const std::string text =
      "[problem]\nname = vintage\n"
      "[simulate]\ncontrol = zero\nx_alpha = -1\n"
      "expected_cost = -1.0\ncost_tolerance = 1e-6\n"
      "expected_value = -1.0\nvalue_tolerance = 1e-9\n";
  CHECK(run_string(text, "simulate", "cli_out_sim") == kExitPass);
  CHECK(std::filesystem::exists("cli_out_sim/trajectory.csv"));
  const std::string traj = slurp("cli_out_sim/trajectory.csv");
  CHECK(traj.substr(0, 4) == "time");
  std::filesystem::remove_all("cli_out_sim");
}
