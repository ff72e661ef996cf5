// Acceptance suite: runs every committed experiment config through the
// runner, one criterion per line, and enforces the per-criterion runtime
// budgets.  Usage: evoctrl_acceptance <configs-dir>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "evoctrl/runner.hpp"

namespace {

struct Criterion {
  const char* name;
  const char* config;
  const char* command;
  double budget_seconds;
};

const std::vector<Criterion> kCriteria = {
    {"1 closed-form value and feedback cost", "accept1_closed_form.cfg", "simulate", 5.0},
    {"2 piecewise-constant synthesis", "accept2_synthesis.cfg", "synthesize", 120.0},
    {"3 suboptimality against random controls", "accept3_suboptimality.cfg", "dp-check", 30.0},
    {"4a enumeration oracle (scalar toy)", "accept4a_oracle_toy.cfg", "oracle", 30.0},
    {"4b enumeration oracle (degenerate)", "accept4b_oracle_vintage.cfg", "oracle", 30.0},
    {"5 envelope regularity suite", "accept5_envelope_regularity.cfg", "convolve-probe", 120.0},
    {"6 perturbed-equation residuals", "accept6_perturbed_residual.cfg", "convolve-probe", 60.0},
    {"7 integral optimality certificate", "accept7_certificate.cfg", "verify", 30.0},
    {"8 superdifferential at the kink", "accept8_superdifferential.cfg", "verify", 10.0},
    {"9 integrator and chain-rule order", "accept9_convergence.cfg", "simulate", 30.0},
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <configs-dir>\n", argv[0]);
    return 2;
  }
  const std::string configs_dir = argv[1];
  std::filesystem::create_directories("acceptance_out");

  int failures = 0;
  for (const auto& c : kCriteria) {
    evoctrl::RunOptions opts;
    opts.command = c.command;
    opts.config_path = configs_dir + "/" + c.config;
    opts.out_dir = std::string("acceptance_out/") + c.config;

    const auto start = std::chrono::steady_clock::now();
    const int code = evoctrl::run(opts);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const bool ok = code == evoctrl::kExitPass && elapsed <= c.budget_seconds;
    if (!ok) ++failures;
    std::printf("%s criterion %s (exit %d, %.2fs of %.0fs)\n", ok ? "PASS" : "FAIL", c.name, code,
                elapsed, c.budget_seconds);
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
