#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "evoctrl/runner.hpp"
#include "evoctrl/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"evoctrl: mild-solution simulation, epsilon-optimal control synthesis and "
               "verification-certificate checking for evolution-equation control problems"};
  app.set_version_flag("--version", evoctrl::kVersion);
  app.require_subcommand(1);

  const std::vector<std::string> commands = {"simulate",       "synthesize", "verify",
                                             "convolve-probe", "dp-check",   "oracle"};

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;

  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory for CSV artifacts and the manifest");
    sub->add_option("--seed", seed, "seed override for sampling commands")
        ->each([&seed_set](const std::string&) { seed_set = true; });
  }

  CLI11_PARSE(app, argc, argv);

  evoctrl::RunOptions options;
  options.command = app.get_subcommands().front()->get_name();
  options.config_path = config_path;
  options.out_dir = out_dir;
  if (seed_set) options.seed = seed;
  return evoctrl::run(options);
}
