// Trial-by-trial simulation of the readout sequence:
// preparation -> probe (heating, depumping) -> detection -> presence test.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "readout/histogram.hpp"
#include "readout/physics.hpp"

namespace readout {

struct NoiseConfig {
  double hyperfine_prep_fidelity = 0.9997;
  double zeeman_prep_fidelity = 0.996;
  double raman_flip_probability = 0.001;
  double presence_test_error = 0.006;
  double vacuum_lifetime = 23.0;      // s
  double sequence_wall_time = 0.092;  // s
  double depump_probability_per_scatter = 1e-3;

  double vacuum_loss_probability() const;
  void validate() const;

  /// Every preparation error and loss channel switched off.
  static NoiseConfig noiseless();
};

struct ExperimentConfig {
  PhysicalConstants constants;
  TrapConfig trap;
  ProbeConfig probe;
  DetectorConfig detector;
  NoiseConfig noise;
  AtomState prepared_state = AtomState::Bright;
  std::uint64_t trials = 9700;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class LossCause { None, ProbeHeating, Vacuum, PresenceTest };

const char* to_string(LossCause c);

struct TrialOutcome {
  AtomState prepared_state = AtomState::Dark;
  AtomState effective_state_at_probe = AtomState::Dark;
  bool raman_flipped = false;
  bool zeeman_error = false;
  std::uint64_t scattered = 0;
  std::uint32_t detected = 0;
  bool lost = false;
  LossCause loss_cause = LossCause::None;
  bool post_selected = true;
};

struct LossSummary {
  std::uint64_t trials = 0;
  std::uint64_t kept = 0;
  std::uint64_t probe_heating = 0;
  std::uint64_t vacuum = 0;
  std::uint64_t presence_test = 0;

  std::uint64_t lost() const { return probe_heating + vacuum + presence_test; }
  double fraction(std::uint64_t n) const {
    return trials == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(trials);
  }
  void record(const TrialOutcome& t);
  void merge(const LossSummary& o);
  friend bool operator==(const LossSummary&, const LossSummary&) = default;
};

struct ExperimentResult {
  CountHistogram histogram;
  LossSummary losses;
  /// No trial survived post-selection. Analysis of `histogram` will throw.
  bool empty() const { return histogram.empty(); }
};

struct PairedResult {
  ExperimentResult dark;
  ExperimentResult bright;
};

/// One trial. A pure function of (config, trial_index).
TrialOutcome simulate_trial(const ExperimentConfig& config, std::uint64_t trial_index);

/// All trials of `config`, in index order.
std::vector<TrialOutcome> simulate_trials(const ExperimentConfig& config, unsigned threads = 1);

/// Post-selected histogram plus loss statistics for config.prepared_state.
/// `threads` = 0 picks the hardware concurrency; output does not depend on it.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 0);

/// Runs the config once per prepared state.
PairedResult run_paired(const ExperimentConfig& config, unsigned threads = 0);

/// Expected probe-heating loss of a bright-prepared atom, estimated from
/// `trials` simulated scatter counts with the thermal energy integrated out
/// analytically. Zero exactly when no photon can be scattered.
double predict_probe_loss(const ExperimentConfig& config, std::uint64_t trials,
                          unsigned threads = 1);

unsigned resolve_threads(unsigned requested);

}  // namespace readout
