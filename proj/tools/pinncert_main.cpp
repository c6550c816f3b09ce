#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pinncert/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"residual certificates for tanh network PDE solvers"};
  app.require_subcommand(1);

  std::string config_path, out_dir_flag, run_dir, csv_path, plot_out;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "train a network and certify every checkpoint");
  run->add_option("--config", config_path, "key = value experiment file")->required();
  run->add_option("--output-dir", out_dir_flag,
                  "output root (PINNCERT_OUT_DIR overrides this)");
  run->add_flag("--quiet", quiet, "suppress progress lines");

  auto* replay = app.add_subcommand("replay",
                                    "recompute metrics.csv from the stored checkpoints");
  replay->add_option("--run", run_dir, "run directory")->required();

  auto* plot = app.add_subcommand("plot", "render curves.svg and ratio.svg from a metrics file");
  plot->add_option("--csv", csv_path, "metrics csv")->required();
  plot->add_option("--out", plot_out, "output directory (default: next to the csv)");

  auto* consts = app.add_subcommand("constants", "tabulate the bound constants as csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = pinncert::load_config(config_path);
      const auto res = pinncert::run_experiment(cfg, out_dir_flag, quiet);
      std::fprintf(stderr, "run: wrote %zu checkpoint rows to %s\n", res.rows.size(),
                   res.run_dir.c_str());
    } else if (replay->parsed()) {
      return pinncert::replay_run(run_dir);
    } else if (plot->parsed()) {
      const std::string out = plot_out.empty()
                                  ? std::filesystem::path(csv_path).parent_path().string()
                                  : plot_out;
      pinncert::write_plots(csv_path, out.empty() ? "." : out);
    } else if (consts->parsed()) {
      pinncert::write_constants_csv(std::cout);
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
