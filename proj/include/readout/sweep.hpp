// Trap-depth sweeps and probe-parameter optimization under a loss ceiling.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <stdexcept>
#include <string>
#include <vector>

#include "readout/montecarlo.hpp"

namespace readout {

class InfeasibleSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A sweep point failed; `index` is its position in SweepSpec::depths.
class SweepError : public std::runtime_error {
 public:
  SweepError(std::size_t index, const std::string& what)
      : std::runtime_error("sweep point " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

struct OptimizationConstraints {
  double max_probe_loss = 0.02;
  double max_saturation = 0.1;
  double min_saturation = 1e-3;  // lower end of the log-spaced saturation grid
  double min_duration = 0.1e-3;  // s
  double max_duration = 5e-3;    // s
  std::size_t duration_points = 40;
  std::size_t saturation_points = 40;
  std::uint64_t loss_trials = 10'000;
  /// Probe settings evaluated in addition to the grid.
  std::vector<ProbeConfig> extra_candidates;

  void validate() const;  // throws InfeasibleSpec
};

struct ProbeOptimum {
  ProbeConfig probe;
  double fidelity = 0.0;
  std::uint32_t threshold = 0;
  double predicted_loss = 0.0;
  std::size_t loss_evaluations = 0;
};

/// Analytic Poisson fidelity and optimal threshold for one probe setting.
std::pair<double, std::uint32_t> model_fidelity(const ExperimentConfig& config,
                                                const ProbeConfig& probe);

/// Best analytic fidelity at trap depth `depth` over the (duration, saturation)
/// grid plus `extra_candidates`, subject to predicted probe loss <= max_probe_loss
/// and s <= max_saturation. Ties go to smaller s, then shorter duration.
/// The template supplies everything except trap depth and probe.
ProbeOptimum optimize_probe(double depth, const OptimizationConstraints& constraints,
                            const ExperimentConfig& config_template, unsigned threads = 0);

struct SweepSpec {
  std::vector<double> depths;  // K, strictly increasing
  /// One entry per depth; std::nullopt asks for optimize_probe at that depth.
  std::vector<std::optional<ProbeConfig>> schedule;
  std::uint64_t trials = 10'000;
  std::uint64_t seed = 1;
  OptimizationConstraints constraints;

  void validate() const;
};

struct SweepRow {
  double depth = 0.0;
  ProbeConfig probe;
  double mean_bright = 0.0;
  double mean_dark = 0.0;
  std::uint32_t threshold = 0;
  double fidelity = 0.0;
  double probe_loss = 0.0;  // fraction of bright trials lost to probe heating
};

std::vector<SweepRow> sweep_depths(const SweepSpec& spec, const ExperimentConfig& config_template,
                                   unsigned threads = 0);

/// The five (depth, duration, saturation) settings used in the reference experiment.
SweepSpec reference_schedule();

}  // namespace readout
