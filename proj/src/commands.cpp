#include "readout/commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "readout/config.hpp"
#include "readout/discrimination.hpp"
#include "readout/io.hpp"
#include "readout/montecarlo.hpp"
#include "readout/sweep.hpp"

namespace readout {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw OutputError("cannot write " + path.string());
  f << content;
  if (!f) throw OutputError("failed writing " + path.string());
}

fs::path prepare_out_dir(const CommandOptions& opts) {
  fs::path dir(opts.out_dir.empty() ? "." : opts.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory " + dir.string());
  return dir;
}

ojson snapshot_json(const RunConfig& cfg) {
  ojson o = ojson::object();
  for (const auto& [k, v] : config_snapshot(cfg)) o[k] = v;
  return o;
}

/// Deterministic manifest part that is embedded in result files.
ojson manifest_reference(const char* command, const std::string& manifest_file,
                         const RunConfig* cfg, std::uint64_t seed) {
  ojson m = ojson::object();
  m["file"] = manifest_file;
  m["tool"] = kToolName;
  m["version"] = kToolVersion;
  m["command"] = command;
  m["seed"] = seed;
  if (cfg) m["config"] = snapshot_json(*cfg);
  return m;
}

/// Full manifest, written next to the outputs. Carries the non-reproducible
/// fields (timestamps, command line) so result files stay byte-stable.
void write_manifest(const fs::path& dir, const std::string& file, const char* command,
                    const CommandOptions& opts, const RunConfig* cfg, std::uint64_t seed,
                    const std::string& started, const std::vector<std::string>& outputs) {
  ojson m = manifest_reference(command, file, cfg, seed);
  m.erase("file");
  m["config_path"] = opts.config_path;
  if (!opts.input_path.empty()) m["input_path"] = opts.input_path;
  m["command_line"] = opts.command_line;
  m["threads"] = opts.threads;
  m["started_utc"] = started;
  m["finished_utc"] = utc_now();
  m["outputs"] = outputs;
  write_file(dir / file, json_text(m));
}

ojson losses_json(const LossSummary& l) {
  return {{"trials", l.trials},
          {"kept", l.kept},
          {"lost", l.lost()},
          {"probe_heating", l.probe_heating},
          {"vacuum", l.vacuum},
          {"presence_test", l.presence_test},
          {"probe_heating_fraction", l.fraction(l.probe_heating)},
          {"vacuum_fraction", l.fraction(l.vacuum)},
          {"presence_test_fraction", l.fraction(l.presence_test)}};
}

ojson budget_json(const ErrorBudget& b) {
  ojson rows = ojson::array();
  for (const auto& r : b.rows) rows.push_back({{"source", r.source}, {"contribution", r.contribution}});
  return {{"rows", rows},
          {"total", b.total},
          {"readout_error", 0.5 * b.total},
          {"threshold", b.threshold},
          {"threshold_no_background", b.threshold_no_background},
          {"method", ErrorBudget::method()}};
}

RunConfig load_with_overrides(const CommandOptions& opts) {
  if (opts.config_path.empty()) throw InvalidConfig("--config", "a config file is required");
  RunConfig cfg = load_config(opts.config_path);
  if (opts.trials) {
    cfg.experiment.trials = *opts.trials;
    if (cfg.sweep) cfg.sweep->trials = *opts.trials;
  }
  if (opts.seed) {
    cfg.experiment.seed = *opts.seed;
    if (cfg.sweep) cfg.sweep->seed = *opts.seed;
  }
  cfg.experiment.validate();
  if (cfg.sweep) cfg.sweep->validate();
  return cfg;
}

/// Maps the error taxonomy onto exit codes.
template <typename Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const ConfigParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const InvalidConfig& e) {
    err << "error: invalid value for '" << e.key() << "': " << e.what() << '\n';
    return kExitInputError;
  } catch (const CsvError& e) {
    err << "error: malformed CSV, " << e.what() << '\n';
    return kExitInputError;
  } catch (const InfeasibleSpec& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NoDataError& e) {
    err << "error: insufficient data: " << e.what() << '\n';
    return kExitNoData;
  } catch (const SweepError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNoData;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

void try_write_plot(const fs::path& path, const std::string& svg, std::ostream& err) {
  try {
    write_file(path, svg);
  } catch (const std::exception& e) {
    err << "warning: plot not written: " << e.what() << '\n';
  }
}

std::string table_name(const char* stem, TableFormat f) {
  return std::string(stem) + (f == TableFormat::Csv ? ".csv" : ".json");
}

}  // namespace

int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string started = utc_now();
    const RunConfig cfg = load_with_overrides(opts);
    const ExperimentConfig& exp = cfg.experiment;
    const PairedResult result = run_paired(exp, opts.threads);
    if (result.dark.empty() || result.bright.empty()) {
      err << "error: insufficient data: no post-selected trials for the "
          << (result.dark.empty() ? "dark" : "bright") << " state ("
          << (result.dark.empty() ? result.dark.losses : result.bright.losses).lost()
          << " of " << exp.trials << " lost)\n";
      return kExitNoData;
    }

    DiscriminationReport rep = analyze(result.dark.histogram, result.bright.histogram);
    const ErrorBudget budget =
        error_budget(budget_inputs(exp.constants, exp.probe, exp.detector), exp.noise, rep.threshold);
    rep.budget = budget.rows;

    const fs::path dir = prepare_out_dir(opts);
    const std::string manifest_file = "run.manifest.json";
    const std::string hist_file = table_name("histogram", opts.format);
    if (opts.format == TableFormat::Csv) {
      std::ostringstream csv;
      write_histogram_csv(csv, result.dark.histogram, result.bright.histogram);
      write_file(dir / hist_file, csv.str());
    } else {
      ojson rows = ojson::array();
      const std::uint32_t last =
          std::max(result.dark.histogram.max_count(), result.bright.histogram.max_count());
      for (std::uint32_t n = 0; n <= last; ++n) {
        rows.push_back({{"n", n},
                        {"count_dark", result.dark.histogram.frequency(n)},
                        {"count_bright", result.bright.histogram.frequency(n)}});
      }
      write_file(dir / hist_file, json_text(rows));
    }

    ojson report = ojson::object();
    report["epsilon_bright"] = rep.epsilon_bright;
    report["epsilon_dark"] = rep.epsilon_dark;
    report["fidelity"] = rep.fidelity;
    report["threshold"] = rep.threshold;
    report["mean_dark"] = rep.mean_dark;
    report["mean_bright"] = rep.mean_bright;
    report["confidence"] = rep.confidence;
    report["budget"] = budget_json(budget);
    report["losses"] = {{"dark", losses_json(result.dark.losses)},
                        {"bright", losses_json(result.bright.losses)}};
    report["manifest"] = manifest_reference("run", manifest_file, &cfg, exp.seed);
    write_file(dir / "report.json", json_text(report));

    std::vector<std::string> outputs = {hist_file, "report.json"};
    if (opts.plot) {
      PlotSeries dark{"dark", {}, {}}, bright{"bright", {}, {}};
      const auto last =
          std::max(result.dark.histogram.max_count(), result.bright.histogram.max_count());
      for (std::uint32_t n = 0; n <= last; ++n) {
        dark.x.push_back(n);
        bright.x.push_back(n);
        dark.y.push_back(static_cast<double>(result.dark.histogram.frequency(n)) /
                         static_cast<double>(result.dark.histogram.kept_trials()));
        bright.y.push_back(static_cast<double>(result.bright.histogram.frequency(n)) /
                           static_cast<double>(result.bright.histogram.kept_trials()));
      }
      try_write_plot(dir / "histogram.svg",
                     svg_plot("Detected photon distribution", "photons detected n", "P(n)",
                              {dark, bright}),
                     err);
      outputs.push_back("histogram.svg");
    }
    write_manifest(dir, manifest_file, "run", opts, &cfg, exp.seed, started, outputs);

    out << "fidelity " << format_double(rep.fidelity) << " +/- " << format_double(rep.confidence)
        << " at n_c = " << rep.threshold << " (<n_D> = " << format_double(rep.mean_dark)
        << ", <n_B> = " << format_double(rep.mean_bright) << ")\n";
    return kExitOk;
  });
}

int cmd_scan_threshold(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string started = utc_now();
    if (opts.input_path.empty()) throw InvalidConfig("--input", "a histogram CSV is required");
    std::ifstream in(opts.input_path, std::ios::binary);
    if (!in) throw CsvError(0, "cannot open " + opts.input_path);
    const HistogramPair hist = read_histogram_csv(in);
    if (hist.dark.empty()) throw NoDataError("dark column has no counts");
    if (hist.bright.empty()) throw NoDataError("bright column has no counts");

    const ThresholdScan scan = threshold_scan(hist.dark, hist.bright);
    const fs::path dir = prepare_out_dir(opts);
    const std::string file = table_name("threshold_scan", opts.format);
    if (opts.format == TableFormat::Csv) {
      std::ostringstream csv;
      write_scan_csv(csv, scan);
      write_file(dir / file, csv.str());
    } else {
      write_file(dir / file, json_text(scan_to_json(scan)));
    }
    std::vector<std::string> outputs = {file};
    if (opts.plot) {
      PlotSeries eps{"epsilon", {}, {}};
      for (const auto& p : scan.points) {
        eps.x.push_back(p.threshold);
        eps.y.push_back(p.epsilon);
      }
      try_write_plot(dir / "threshold_scan.svg",
                     svg_plot("Readout error vs threshold", "threshold n_c", "epsilon", {eps}), err);
      outputs.push_back("threshold_scan.svg");
    }
    write_manifest(dir, "scan-threshold.manifest.json", "scan-threshold", opts, nullptr, 0,
                   started, outputs);
    const ScanPoint& best = scan.optimum();
    out << "minimum readout error " << format_double(best.epsilon) << " at n_c = "
        << best.threshold << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string started = utc_now();
    const RunConfig cfg = load_with_overrides(opts);
    if (!cfg.sweep) throw InvalidConfig("sweep.depths_mK", "config has no [sweep] section");
    const SweepSpec& spec = *cfg.sweep;
    const std::vector<SweepRow> rows = sweep_depths(spec, cfg.experiment, opts.threads);

    const fs::path dir = prepare_out_dir(opts);
    const std::string file = table_name("sweep", opts.format);
    if (opts.format == TableFormat::Csv) {
      std::ostringstream csv;
      write_sweep_csv(csv, rows);
      write_file(dir / file, csv.str());
    } else {
      write_file(dir / file, json_text(sweep_to_json(rows)));
    }
    std::vector<std::string> outputs = {file};
    if (opts.plot) {
      std::vector<double> depths;
      std::vector<ProbeConfig> probes;
      PlotSeries sim_f{"simulated F", {}, {}}, sim_nb{"simulated <n_B>", {}, {}};
      for (const auto& r : rows) {
        depths.push_back(r.depth);
        probes.push_back(r.probe);
        sim_f.x.push_back(r.depth * 1e3);
        sim_f.y.push_back(r.fidelity);
        sim_nb.x.push_back(r.depth * 1e3);
        sim_nb.y.push_back(r.mean_bright);
      }
      PlotSeries model{"Poisson model", {}, {}, false};
      for (const auto& p :
           model_fidelity_curve(depths, probes, cfg.experiment.constants, cfg.experiment.detector)) {
        model.x.push_back(p.depth * 1e3);
        model.y.push_back(p.fidelity);
      }
      try_write_plot(dir / "sweep_fidelity.svg",
                     svg_plot("Readout fidelity vs trap depth", "U / k_B (mK)", "F",
                              {sim_f, model}),
                     err);
      try_write_plot(dir / "sweep_mean_bright.svg",
                     svg_plot("Mean bright counts vs trap depth", "U / k_B (mK)", "<n_B>",
                              {sim_nb}),
                     err);
      outputs.push_back("sweep_fidelity.svg");
      outputs.push_back("sweep_mean_bright.svg");
    }
    write_manifest(dir, "sweep.manifest.json", "sweep", opts, &cfg, spec.seed, started, outputs);
    out << rows.size() << " sweep points written to " << (dir / file).string() << '\n';
    return kExitOk;
  });
}

int cmd_budget(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string started = utc_now();
    const RunConfig cfg = load_with_overrides(opts);
    const ExperimentConfig& exp = cfg.experiment;
    const BudgetInputs in = budget_inputs(exp.constants, exp.probe, exp.detector);
    const ErrorBudget budget = error_budget(in, exp.noise);

    std::ostringstream text;
    text << std::left << std::setw(26) << "source" << std::right << std::setw(14)
         << "contribution" << '\n';
    for (const auto& r : budget.rows) {
      text << std::left << std::setw(26) << r.source << std::right << std::setw(13) << std::fixed
           << std::setprecision(4) << r.contribution * 100 << "%\n";
    }
    text << std::left << std::setw(26) << "total" << std::right << std::setw(13) << std::fixed
         << std::setprecision(4) << budget.total * 100 << "%\n";
    text << "threshold n_c = " << budget.threshold << ", <n_D> = " << format_double(in.mean_dark)
         << ", <n_B> = " << format_double(in.mean_bright) << '\n';

    ojson doc = budget_json(budget);
    doc["mean_dark"] = in.mean_dark;
    doc["mean_bright"] = in.mean_bright;
    doc["manifest"] = manifest_reference("budget", "budget.manifest.json", &cfg, exp.seed);

    const fs::path dir = prepare_out_dir(opts);
    write_file(dir / "budget.json", json_text(doc));
    write_file(dir / "budget.txt", text.str());
    write_manifest(dir, "budget.manifest.json", "budget", opts, &cfg, exp.seed, started,
                   {"budget.json", "budget.txt"});
    out << text.str();
    return kExitOk;
  });
}

}  // namespace readout
