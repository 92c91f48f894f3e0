#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "swpic/bench/scenario.hpp"

using namespace swpic::bench;

int main(int argc, char** argv) {
  CLI::App app{"swpic: decorated-particle Vlasov-Poisson runs"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run a scenario from a config file");

  std::string config_path;
  std::optional<std::string> scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> n_markers, n_clusters;
  std::optional<double> dt;
  std::optional<int> steps;
  std::optional<std::string> out;
  run->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
  run->add_option("--scenario", scenario, "TestParticle, TwoStream, Landau, Convergence or ErrorScaling");
  run->add_option("--seed", seed);
  run->add_option("--n-markers", n_markers);
  run->add_option("--n-clusters", n_clusters);
  run->add_option("--dt", dt);
  run->add_option("--steps", steps);
  run->add_option("--out", out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<ScenarioKind> kind;
    if (scenario) kind = parse_scenario_kind(*scenario);
    ScenarioConfig cfg = load_config(config_path, kind);
    if (seed) cfg.seed = *seed;
    if (n_markers) set_config_value(cfg, "n_markers", *n_markers);
    if (n_clusters) set_config_value(cfg, "n_clusters", *n_clusters);
    if (dt) cfg.dt = *dt;
    if (steps) cfg.n_steps = *steps;
    if (out) cfg.output_dir = *out;
    run_scenario(cfg);
    std::cout << "wrote " << cfg.output_dir << "/summary.txt\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
