// Command-line front end: one config file in, one JSON report (plus optional
// CSV grids) out. See README.md for the config schema.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "specflow/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"periodic wave solutions via spectral-flow index theory and "
               "saddle point reduction"};

  std::string config_path;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  bool force = false;

  app.add_option("--config", config_path, "path to the run config (JSON)")
      ->required();
  app.add_option("--output", output_dir, "directory for report.json and grids");
  app.add_option("--seed", seed, "override the config seed");
  app.add_flag("--force", force, "run even when a required hypothesis fails");

  CLI11_PARSE(app, argc, argv);

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read config: " << config_path << "\n";
    return specflow::kExitConfigError;
  }
  std::ostringstream text;
  text << in.rdbuf();

  return specflow::run_cli(text.str(), output_dir, seed, force, std::cerr);
}
