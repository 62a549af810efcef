#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ddc: data-driven control from one trajectory and side information"};
  app.require_subcommand(1);
  std::string out, target;
  std::uint64_t seed = 0;
  bool quiet = false;
  auto* out_opt = app.add_option("--out", out, "output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_flag("--quiet", quiet, "suppress progress messages");

  auto* run = app.add_subcommand("run", "run one episode from a config file");
  run->add_option("config", target, "config file")->required();
  auto* verify = app.add_subcommand("verify", "run an acceptance battery");
  verify->add_option("suite", target, "interval, contraction, reach, scp, theorem3 or all")->required();
  auto* ablate = app.add_subcommand("ablate", "compare the side-information tiers on one seed");
  ablate->add_option("config", target, "config file")->required();
  for (auto* sub : {run, verify, ablate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ddc::cli::kUsage;
  }

  const std::optional<std::string> o = *out_opt ? std::optional(out) : std::nullopt;
  const std::optional<std::uint64_t> s = *seed_opt ? std::optional(seed) : std::nullopt;
  try {
    if (*run) return ddc::cli::cmd_run(target, o, s, quiet);
    if (*verify) return ddc::cli::cmd_verify(target, s, quiet);
    return ddc::cli::cmd_ablate(target, o, s, quiet);
  } catch (const std::exception& e) {
    std::cerr << "ddc: " << e.what() << '\n';
    return ddc::cli::exit_code(e);
  }
}
