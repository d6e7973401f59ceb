#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ylab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"interpretable LSTM forecasting toolkit"};
  app.require_subcommand(1);

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "execute the study described by a config file");
  run->add_option("config", run_config, "path to the experiment config")->required();

  std::string plot_artifact, plot_kind, plot_out;
  CLI::App* plot = app.add_subcommand("plot", "turn a report artifact into plot-data JSON");
  plot->add_option("artifact", plot_artifact, "path to a report or trace JSON")->required();
  plot->add_option("--kind", plot_kind, "boxplot | overlay | weights | histogram")->required();
  plot->add_option("--out", plot_out, "output path (default: alongside the artifact)");

  std::string synth_config;
  CLI::App* synth = app.add_subcommand("synth", "generate the configured synthetic dataset");
  synth->add_option("config", synth_config, "path to the experiment config")->required();

  app.add_subcommand("check", "run fast invariant self-tests");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return ylab::cmd_run(run_config);
    if (plot->parsed()) return ylab::cmd_plot(plot_artifact, plot_kind, plot_out);
    if (synth->parsed()) return ylab::cmd_synth(synth_config);
    return ylab::cmd_check();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
