#include "app/config.hpp"
#include "app/experiments.hpp"

#include "partrace/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalError = 2, kValidationFailure = 3 };

}  // namespace

int main(int argc, char** argv) {
  using namespace partrace;
  CLI::App cli{"partrace: deflated stochastic partial traces of exp(-beta H)"};
  cli.require_subcommand(1);
  cli.fallthrough();

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> max_n;
  cli.add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
  cli.add_option("--out-dir", out_dir, "Output directory (overrides out_dir)");
  cli.add_option("--seed", seed, "Base random seed (overrides seed)");
  cli.add_option("--threads", threads, "Worker threads (overrides threads)")->check(CLI::PositiveNumber);
  cli.add_option("--max-n", max_n, "Largest accepted number of sites")->check(CLI::PositiveNumber);

  auto* sweep = cli.add_subcommand("sweep", "Reduced density matrices and observables over (h, beta)");
  auto* study = cli.add_subcommand("variance-study", "Repeated runs per (k, m) cell");
  auto* validate_cmd = cli.add_subcommand("validate", "Compare every estimator with the dense oracle");
  auto* bisect = cli.add_subcommand("bisect-h", "Plateau boundaries of the ground-state entropy in h");
  auto* profile = cli.add_subcommand("variance-profile", "Deflated variance bound from the dense spectrum");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    app::Config config = app::load_config(config_path);
    if (out_dir) config.out_dir = *out_dir;
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    if (max_n) config.max_n = *max_n;
    app::validate(config);

    if (sweep->parsed()) {
      app::run_sweep(config, std::cerr);
    } else if (study->parsed()) {
      app::run_variance_study(config, std::cerr);
    } else if (validate_cmd->parsed()) {
      if (!app::run_validate(config, std::cout)) return kValidationFailure;
    } else if (bisect->parsed()) {
      const auto res = app::run_bisect_h(config, std::cerr);
      for (const auto& [a, b] : res.intervals) std::cout << a << ' ' << b << '\n';
    } else if (profile->parsed()) {
      app::run_variance_profile(config, std::cerr);
    }
  } catch (const app::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
