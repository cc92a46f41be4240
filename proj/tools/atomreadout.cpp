// atomreadout: simulate and analyze fluorescence state readout of a trapped atom.
//
//   atomreadout run            --config baseline.cfg --out results/
//   atomreadout scan-threshold --input results/histogram.csv --out results/
//   atomreadout sweep          --config sweep.cfg --plot
//   atomreadout budget         --config baseline.cfg
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "readout/commands.hpp"

int main(int argc, char** argv) {
  using namespace readout;

  CommandOptions opts;
  for (int i = 0; i < argc; ++i) opts.command_line.emplace_back(argv[i]);

  CLI::App app{"Monte Carlo simulation and threshold analysis of single-atom fluorescence readout"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  const std::map<std::string, TableFormat> formats{{"csv", TableFormat::Csv},
                                                  {"json", TableFormat::Json}};
  std::uint64_t trials = 0, seed = 0;

  auto common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) {
      sub->add_option("--config,-c", opts.config_path, "configuration file")->required();
      sub->add_option("--trials", trials, "override run/sweep trial count");
      sub->add_option("--seed", seed, "override the random seed");
      sub->add_option("--threads", opts.threads, "worker threads (0 = auto)");
    }
    sub->add_option("--out,-o", opts.out_dir, "output directory");
    sub->add_option("--format", opts.format, "table format: csv or json")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    sub->add_flag("--plot", opts.plot, "also write SVG plots");
  };

  auto* run = app.add_subcommand("run", "simulate dark and bright histograms and analyze them");
  common(run, true);
  auto* scan = app.add_subcommand("scan-threshold", "readout error versus threshold for a histogram CSV");
  scan->add_option("--input,-i,input", opts.input_path, "histogram CSV written by 'run'")->required();
  common(scan, false);
  auto* sweep = app.add_subcommand("sweep", "simulate every depth of a [sweep] section");
  common(sweep, true);
  auto* budget = app.add_subcommand("budget", "error budget from the analytic count model");
  common(budget, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  if (chosen->get_option_no_throw("--trials") && chosen->count("--trials") > 0) opts.trials = trials;
  if (chosen->get_option_no_throw("--seed") && chosen->count("--seed") > 0) opts.seed = seed;

  try {
    if (*run) return cmd_run(opts, std::cout, std::cerr);
    if (*scan) return cmd_scan_threshold(opts, std::cout, std::cerr);
    if (*sweep) return cmd_sweep(opts, std::cout, std::cerr);
    if (*budget) return cmd_budget(opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitInputError;
}
