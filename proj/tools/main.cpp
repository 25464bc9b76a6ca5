#include <CLI11.hpp>

#include "ergmfg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stationary mean field game solver with explosive boundary data"};
  app.require_subcommand(0, 0);

  ergmfg::RunManifest manifest;
  app.add_option("command", manifest.command,
                 "solve-nonlocal | solve-local | hjb | kfp | sweep | particles | uniqueness")
      ->required();
  app.add_option("--config", manifest.config_path, "config file path")->required();
  app.add_option("--out", manifest.out_dir, "output directory");
  app.add_option("--seed", manifest.seed, "random seed");
  app.add_option("--log", manifest.log_level, "log level: quiet | info | debug");
  app.add_option("--a", manifest.run_a, "first run directory (uniqueness)");
  app.add_option("--b", manifest.run_b, "second run directory (uniqueness)");

  CLI11_PARSE(app, argc, argv);
  return ergmfg::run(manifest);
}
