#include "readout/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "readout/discrimination.hpp"

namespace readout {

namespace {

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (n == 1) return {hi};
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace

void OptimizationConstraints::validate() const {
  if (!(max_probe_loss >= 0 && max_probe_loss < 1)) {
    throw InfeasibleSpec("max_probe_loss must lie in [0, 1)");
  }
  if (!(max_saturation > 0)) throw InfeasibleSpec("max_saturation must be > 0");
  if (!(min_saturation > 0 && min_saturation <= max_saturation)) {
    throw InfeasibleSpec("saturation bounds must satisfy 0 < min <= max");
  }
  if (!(min_duration > 0 && min_duration <= max_duration)) {
    throw InfeasibleSpec("duration bounds must satisfy 0 < min <= max");
  }
  if (duration_points == 0 || saturation_points == 0) {
    throw InfeasibleSpec("grid must have at least one point per axis");
  }
  if (loss_trials == 0) throw InfeasibleSpec("loss_trials must be >= 1");
}

std::pair<double, std::uint32_t> model_fidelity(const ExperimentConfig& config,
                                                const ProbeConfig& probe) {
  const double dark = expected_counts(config.constants, probe, config.detector, AtomState::Dark);
  const double bright =
      expected_counts(config.constants, probe, config.detector, AtomState::Bright);
  const auto scan = threshold_scan(PoissonCounts{dark}, PoissonCounts{bright});
  return {1.0 - scan.optimum().epsilon, scan.optimum().threshold};
}

ProbeOptimum optimize_probe(double depth, const OptimizationConstraints& constraints,
                            const ExperimentConfig& config_template, unsigned threads) {
  constraints.validate();
  if (!(depth > 0)) throw InfeasibleSpec("trap depth must be > 0");

  ExperimentConfig cfg = config_template;
  cfg.trap.depth = depth;
  cfg.prepared_state = AtomState::Bright;

  struct Candidate {
    ProbeConfig probe;
    double fidelity;
    std::uint32_t threshold;
  };
  std::vector<Candidate> candidates;
  const auto durations =
      log_grid(constraints.min_duration, constraints.max_duration, constraints.duration_points);
  auto saturations = log_grid(constraints.min_saturation, constraints.max_saturation,
                              constraints.saturation_points);
  saturations.insert(saturations.begin(), 0.0);  // no light: always loss-free
  for (double s : saturations) {
    for (double dt : durations) candidates.push_back({{s, dt}, 0.0, 0});
  }
  for (const ProbeConfig& p : constraints.extra_candidates) {
    if (p.saturation <= constraints.max_saturation && p.saturation >= 0 && p.duration >= 0) {
      candidates.push_back({p, 0.0, 0});
    }
  }
  for (auto& c : candidates) std::tie(c.fidelity, c.threshold) = model_fidelity(cfg, c.probe);

  // The objective is analytic, so the first feasible candidate in objective
  // order is the optimum; loss is only estimated until that point.
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.fidelity, a.probe.saturation, a.probe.duration) <
           std::tie(a.fidelity, b.probe.saturation, b.probe.duration);
  });

  ProbeOptimum best;
  for (const Candidate& c : candidates) {
    cfg.probe = c.probe;
    const double loss = predict_probe_loss(cfg, constraints.loss_trials, threads);
    ++best.loss_evaluations;
    if (loss <= constraints.max_probe_loss) {
      best.probe = c.probe;
      best.fidelity = c.fidelity;
      best.threshold = c.threshold;
      best.predicted_loss = loss;
      return best;
    }
  }
  // Unreachable: s = 0 never loses the atom.
  throw InfeasibleSpec("no probe setting satisfies the loss ceiling");
}

void SweepSpec::validate() const {
  if (depths.empty()) throw InvalidConfig("sweep.depths", "must not be empty");
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (!(depths[i] > 0)) throw InvalidConfig("sweep.depths", "must be > 0");
    if (i > 0 && !(depths[i] > depths[i - 1])) {
      throw InvalidConfig("sweep.depths", "must be strictly increasing");
    }
  }
  if (schedule.size() != depths.size()) {
    throw InvalidConfig("sweep.schedule", "needs one entry per depth");
  }
  for (const auto& p : schedule) {
    if (p) p->validate();
  }
  if (trials == 0) throw InvalidConfig("sweep.trials", "must be >= 1");
  const bool optimizing = std::any_of(schedule.begin(), schedule.end(),
                                      [](const auto& p) { return !p.has_value(); });
  if (optimizing) constraints.validate();
}

std::vector<SweepRow> sweep_depths(const SweepSpec& spec, const ExperimentConfig& config_template,
                                   unsigned threads) {
  spec.validate();
  std::vector<SweepRow> rows;
  rows.reserve(spec.depths.size());
  for (std::size_t i = 0; i < spec.depths.size(); ++i) {
    ExperimentConfig cfg = config_template;
    cfg.trap.depth = spec.depths[i];
    cfg.trials = spec.trials;
    cfg.seed = spec.seed;
    if (spec.schedule[i]) {
      cfg.probe = *spec.schedule[i];
    } else {
      cfg.probe = optimize_probe(cfg.trap.depth, spec.constraints, cfg, threads).probe;
    }

    SweepRow row;
    row.depth = cfg.trap.depth;
    row.probe = cfg.probe;
    try {
      const PairedResult r = run_paired(cfg, threads);
      const DiscriminationReport rep = analyze(r.dark.histogram, r.bright.histogram);
      row.mean_bright = rep.mean_bright;
      row.mean_dark = rep.mean_dark;
      row.threshold = rep.threshold;
      row.fidelity = rep.fidelity;
      row.probe_loss = r.bright.losses.fraction(r.bright.losses.probe_heating);
    } catch (const std::exception& e) {
      throw SweepError(i, e.what());
    }
    rows.push_back(row);
  }
  return rows;
}

SweepSpec reference_schedule() {
  SweepSpec spec;
  spec.depths = {0.24e-3, 0.36e-3, 0.7e-3, 1.1e-3, 1.4e-3};
  const double durations[] = {0.7e-3, 0.75e-3, 1.0e-3, 1.25e-3, 1.5e-3};
  const double saturations[] = {1.1e-2, 1.9e-2, 3.7e-2, 4.9e-2, 6.1e-2};
  for (std::size_t i = 0; i < 5; ++i) spec.schedule.push_back(ProbeConfig{saturations[i], durations[i]});
  return spec;
}

}  // namespace readout
