// Command-line harness: sample, exact, bench.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "newtonmc/harness.hpp"

namespace nh = newtonmc::harness;

namespace {

struct Flags {
  std::string config;
  std::string out;
  bool overwrite = false;
  std::int64_t seed = -1;
  int threads = 1;
};

void add_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "experiment config file")->required();
  cmd->add_option("--out", flags.out, "output directory (overrides [output] dir)");
  cmd->add_flag("--overwrite", flags.overwrite, "allow writing into a non-empty output directory");
  cmd->add_option("--seed", flags.seed, "single seed overriding [run] seeds")->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", flags.threads, "worker threads for seeds and proposals")
      ->check(CLI::PositiveNumber);
}

int run(const std::string& command, const Flags& flags) {
  const auto config = nh::load_config(flags.config);
  nh::CommandOptions options;
  options.out = flags.out;
  options.overwrite = flags.overwrite;
  if (flags.seed >= 0) options.seed = static_cast<std::uint64_t>(flags.seed);
  options.threads = flags.threads;
  options.config_dir = std::filesystem::path(flags.config).parent_path();

  if (command == "sample") {
    const auto chains = nh::cmd_sample(config, options);
    for (const auto& c : chains)
      std::printf("seed %llu  rmse %.6g  ess %.1f  acceptance %.3f\n",
                  static_cast<unsigned long long>(c.seed), c.final_rmse, c.ess,
                  c.acceptance.acceptance_rate);
    return nh::kExitOk;
  }
  if (command == "bench") {
    const auto chains = nh::cmd_bench(config, options);
    for (const auto& c : chains)
      std::printf("%-12s seed %llu  rmse %.6g  ess %.1f  acceptance %.3f  changed %.2f\n",
                  c.proposal.c_str(), static_cast<unsigned long long>(c.seed), c.final_rmse, c.ess,
                  c.acceptance.acceptance_rate, c.acceptance.mean_changed_accepted);
    return nh::kExitOk;
  }
  const auto outcome = nh::cmd_exact(config, options);
  for (const auto& r : outcome.theorem_one)
    std::printf("theorem 1  alpha %-8g l1 %.6e  bound %.6e  %s\n", r.alpha, r.l1_distance, r.bound,
                r.holds() ? "ok" : "VIOLATED");
  if (outcome.theorem_two) {
    const auto& r = *outcome.theorem_two;
    std::printf("theorem 2  c %.6e  gap(Q) %.6e  gap(Q~) %.6e  var(Q) %.6e  var(Q~) %.6e  %s\n", r.c,
                r.gap_q, r.gap_qtilde, r.var_q, r.var_qtilde, r.holds() ? "ok" : "VIOLATED");
  }
  return outcome.violated ? nh::kExitTheorem : nh::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Newton-proposal discrete MCMC harness"};
  app.require_subcommand(1);
  Flags flags;
  auto* sample = app.add_subcommand("sample", "run seeded chains and write traces");
  auto* exact = app.add_subcommand("exact", "verify the convergence theorems on an enumerable model");
  auto* bench = app.add_subcommand("bench", "compare several proposals on one model");
  for (auto* cmd : {sample, exact, bench}) add_flags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? nh::kExitOk : nh::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, flags);
  } catch (const nh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return nh::kExitConfig;
  } catch (const newtonmc::StateSpaceTooLarge& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return nh::kExitResource;
  } catch (const newtonmc::InvalidArgument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return nh::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nh::kExitFailure;
  }
}
