// aoi: experiment runner and checks for Whittle-index age-of-information
// scheduling.
//
//   aoi run <config.json> [--horizon N] [--replications R] [--seed-base S] [--output DIR] [--x-max M]
//   aoi verify [--grid small|full]
//   aoi index --p P --x X --lambda 0|1
//   aoi threshold --p P --cost C

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "aoi/experiment.hpp"
#include "aoi/verify.hpp"
#include "aoi/whittle.hpp"

namespace {

int run_command(const std::string& config_path, std::optional<std::uint64_t> horizon,
                std::optional<std::uint64_t> replications, std::optional<std::uint64_t> seed_base,
                std::optional<std::string> output, std::optional<aoi::Age> x_max) {
  aoi::ExperimentConfig config = aoi::load_config(config_path);
  if (horizon) config.horizon = *horizon;
  if (replications) config.replications = *replications;
  if (seed_base) config.seed_base = *seed_base;
  if (output) config.output = *output;
  if (x_max) config.mdp.x_max = *x_max;

  const aoi::ExperimentResult result = aoi::run_experiment(config);
  for (const auto& path : aoi::write_outputs(config, result)) fmt::print("wrote {}\n", path.string());
  for (const auto& s : result.summary) {
    fmt::print("point {} {:<14} mean {:.6f}  se {:.6f}{}\n", s.point, aoi::to_string(s.scheduler), s.mean,
               s.std_error, s.ratio_to_optimal ? fmt::format("  ratio {:.4f}", *s.ratio_to_optimal) : "");
  }
  return EXIT_SUCCESS;
}

int verify_command(const std::string& grid_name) {
  const aoi::VerifyGrid grid = aoi::VerifyGrid::named(grid_name);
  bool ok = true;
  for (const aoi::CheckResult& check : aoi::run_verification(grid)) {
    ok = ok && check.passed;
    fmt::print("{:<5} {:<30} worst {:.3e}{}\n", check.passed ? "PASS" : "FAIL", check.name, check.worst_residual,
               check.detail.empty() ? "" : "  (" + check.detail + ")");
  }
  return ok ? EXIT_SUCCESS : EXIT_FAILURE;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whittle-index scheduling for age of information"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> horizon, replications, seed_base;
  std::optional<std::string> output;
  std::optional<aoi::Age> x_max;
  auto* run = app.add_subcommand("run", "Run a scheduler comparison from a JSON config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--horizon", horizon, "Override the number of slots per run");
  run->add_option("--replications", replications, "Override the number of replications");
  run->add_option("--seed-base", seed_base, "Override the first seed");
  run->add_option("--output", output, "Override the output directory");
  run->add_option("--x-max", x_max, "Override the joint-MDP truncation age");

  std::string grid = "small";
  auto* verify = app.add_subcommand("verify", "Run the closed-form and oracle cross-checks");
  verify->add_option("--grid", grid, "Parameter grid")->check(CLI::IsMember({"small", "full"}));

  double p = 0.0;
  aoi::Age x = 1;
  int lambda = 1;
  auto* index = app.add_subcommand("index", "Print the Whittle index I(x, lambda)");
  index->add_option("--p", p, "Arrival probability in (0, 1]")->required();
  index->add_option("--x", x, "Age >= 1")->required();
  index->add_option("--lambda", lambda, "Arrival flag")->required()->check(CLI::IsMember({0, 1}));

  double cost = 0.0;
  auto* threshold = app.add_subcommand("threshold", "Print the optimal threshold for update cost C");
  threshold->add_option("--p", p, "Arrival probability in (0, 1]")->required();
  threshold->add_option("--cost", cost, "Update cost C >= 0")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, horizon, replications, seed_base, output, x_max);
    if (*verify) return verify_command(grid);
    if (*index) {
      fmt::print("{:.17g}\n", aoi::whittle_index(x, lambda == 1, p));
      return EXIT_SUCCESS;
    }
    if (*threshold) {
      fmt::print("{}\n", aoi::optimal_threshold({p, cost}));
      return EXIT_SUCCESS;
    }
  } catch (const aoi::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return EXIT_FAILURE;
  }
  return EXIT_FAILURE;
}
