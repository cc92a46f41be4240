#include "readout/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "readout/rng.hpp"

namespace readout {

namespace {

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw InvalidConfig(key, what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

std::uint64_t domain_of(AtomState s) { return s == AtomState::Bright ? 0xB1ULL : 0xD0ULL; }

/// Upper tail of Gamma(3, 1): the probability that the thermal energy of a 3D
/// harmonic oscillator exceeds x k_B T.
double thermal_tail(double x) {
  if (x <= 0) return 1.0;
  return std::exp(-x) * (1.0 + x + 0.5 * x * x);
}

/// State after preparation and the random scatter budget of the probe.
struct ProbeDraw {
  AtomState effective = AtomState::Dark;
  bool raman_flipped = false;
  bool zeeman_error = false;
  std::uint64_t candidates = 0;  // Poisson number of scattering events offered
  std::uint64_t depump_at = kNever;  // event index that sends the atom dark
};

ProbeDraw draw_probe(const ExperimentConfig& cfg, std::uint64_t index) {
  const std::uint64_t domain = domain_of(cfg.prepared_state);
  const NoiseConfig& noise = cfg.noise;
  ProbeDraw d;

  auto prep = stream_for(cfg.seed, domain, index, Stage::Preparation);
  const double u_hyperfine = prep.uniform();
  const double u_zeeman = prep.uniform();
  double window = 1.0;

  if (cfg.prepared_state == AtomState::Bright) {
    if (u_hyperfine < 1.0 - noise.hyperfine_prep_fidelity) {
      d.effective = AtomState::Dark;
    } else {
      d.effective = AtomState::Bright;
      d.zeeman_error = u_zeeman < 1.0 - noise.zeeman_prep_fidelity;
    }
  } else {
    d.raman_flipped = u_hyperfine < noise.raman_flip_probability;
    d.effective = d.raman_flipped ? AtomState::Bright : AtomState::Dark;
    if (d.raman_flipped) {
      // Flipped at a uniformly random moment; scatters for the rest of the pulse.
      auto w = stream_for(cfg.seed, domain, index, Stage::RamanWindow);
      window = w.uniform();
    }
  }

  if (d.effective == AtomState::Bright) {
    const double mean = expected_scattered(cfg.constants, cfg.probe) * window;
    if (mean > 0) {
      auto gen = stream_for(cfg.seed, domain, index, Stage::Scatter);
      std::poisson_distribution<std::uint64_t> poisson(mean);
      d.candidates = poisson(gen);
    }
    if (d.zeeman_error) {
      const double p = noise.depump_probability_per_scatter;
      if (p >= 1.0) {
        d.depump_at = 1;
      } else if (p > 0.0) {
        auto gen = stream_for(cfg.seed, domain, index, Stage::Depump);
        const double u = 1.0 - gen.uniform();  // (0, 1]
        const double k = std::floor(std::log(u) / std::log1p(-p));
        d.depump_at = k >= 1e18 ? kNever : 1 + static_cast<std::uint64_t>(k);
      }
    }
  }
  return d;
}

/// Thermal energy at probe time in units of k_B T.
double draw_thermal(const ExperimentConfig& cfg, std::uint64_t index) {
  auto gen = stream_for(cfg.seed, domain_of(cfg.prepared_state), index, Stage::Thermal);
  double x = 0;
  for (int i = 0; i < 3; ++i) x -= std::log1p(-gen.uniform());
  return x;
}

/// Index of the first scattering event that leaves the atom above the trap depth.
std::uint64_t loss_event(const ExperimentConfig& cfg, double initial_energy) {
  const double depth = cfg.constants.k_boltzmann * cfg.trap.depth;
  if (initial_energy > depth) return 1;
  const double per_event = cfg.trap.heating_per_scatter * recoil_energy(cfg.constants);
  if (per_event <= 0) return kNever;
  const double k = std::floor((depth - initial_energy) / per_event);
  return k >= 1e18 ? kNever : static_cast<std::uint64_t>(k) + 1;
}

template <typename Partial, typename Body>
std::vector<Partial> parallel_chunks(std::uint64_t n, unsigned threads, Body body) {
  const unsigned workers =
      static_cast<unsigned>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(threads, n)));
  std::vector<Partial> parts(workers);
  const std::uint64_t chunk = (n + workers - 1) / workers;
  auto run = [&](unsigned w) {
    const std::uint64_t begin = std::min(n, w * chunk);
    const std::uint64_t end = std::min(n, begin + chunk);
    body(begin, end, parts[w]);
  };
  if (workers == 1) {
    run(0);
    return parts;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  return parts;
}

}  // namespace

double NoiseConfig::vacuum_loss_probability() const {
  return -std::expm1(-sequence_wall_time / vacuum_lifetime);
}

void NoiseConfig::validate() const {
  require(is_probability(hyperfine_prep_fidelity), "noise.hyperfine_prep_fidelity", "must be in [0, 1]");
  require(is_probability(zeeman_prep_fidelity), "noise.zeeman_prep_fidelity", "must be in [0, 1]");
  require(is_probability(raman_flip_probability), "noise.raman_flip_probability", "must be in [0, 1]");
  require(is_probability(presence_test_error), "noise.presence_test_error", "must be in [0, 1]");
  require(is_probability(depump_probability_per_scatter), "noise.depump_probability_per_scatter",
          "must be in [0, 1]");
  require(vacuum_lifetime > 0, "noise.vacuum_lifetime_s", "must be > 0");
  require(sequence_wall_time >= 0, "noise.sequence_wall_time_ms", "must be >= 0");
}

NoiseConfig NoiseConfig::noiseless() {
  NoiseConfig n;
  n.hyperfine_prep_fidelity = 1.0;
  n.zeeman_prep_fidelity = 1.0;
  n.raman_flip_probability = 0.0;
  n.presence_test_error = 0.0;
  n.sequence_wall_time = 0.0;
  n.depump_probability_per_scatter = 0.0;
  return n;
}

void ExperimentConfig::validate() const {
  constants.validate();
  trap.validate();
  probe.validate();
  detector.validate();
  noise.validate();
  require(trials >= 1, "run.trials", "must be >= 1");
}

const char* to_string(LossCause c) {
  switch (c) {
    case LossCause::None: return "none";
    case LossCause::ProbeHeating: return "probe_heating";
    case LossCause::Vacuum: return "vacuum";
    case LossCause::PresenceTest: return "presence_test";
  }
  return "unknown";
}

void LossSummary::record(const TrialOutcome& t) {
  ++trials;
  switch (t.loss_cause) {
    case LossCause::None: ++kept; break;
    case LossCause::ProbeHeating: ++probe_heating; break;
    case LossCause::Vacuum: ++vacuum; break;
    case LossCause::PresenceTest: ++presence_test; break;
  }
}

void LossSummary::merge(const LossSummary& o) {
  trials += o.trials;
  kept += o.kept;
  probe_heating += o.probe_heating;
  vacuum += o.vacuum;
  presence_test += o.presence_test;
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

TrialOutcome simulate_trial(const ExperimentConfig& cfg, std::uint64_t index) {
  const std::uint64_t domain = domain_of(cfg.prepared_state);
  const ProbeDraw draw = draw_probe(cfg, index);

  TrialOutcome out;
  out.prepared_state = cfg.prepared_state;
  out.effective_state_at_probe = draw.effective;
  out.raman_flipped = draw.raman_flipped;
  out.zeeman_error = draw.zeeman_error;

  bool heated_out = false;
  if (draw.candidates > 0) {
    const double energy = cfg.constants.k_boltzmann * cfg.trap.temperature_at_probe() *
                          draw_thermal(cfg, index);
    const std::uint64_t lost_at = loss_event(cfg, energy);
    const std::uint64_t offered = std::min(draw.candidates, draw.depump_at);
    heated_out = lost_at <= offered;
    out.scattered = heated_out ? lost_at : offered;
  }

  std::uint64_t clicks = 0;
  if (out.scattered > 0 && cfg.detector.collection_efficiency > 0) {
    auto gen = stream_for(cfg.seed, domain, index, Stage::Detection);
    std::binomial_distribution<std::uint64_t> collect(out.scattered,
                                                      cfg.detector.collection_efficiency);
    clicks += collect(gen);
  }
  const double background = cfg.detector.dark_count_rate * cfg.probe.duration;
  if (background > 0) {
    auto gen = stream_for(cfg.seed, domain, index, Stage::Background);
    std::poisson_distribution<std::uint64_t> dark(background);
    clicks += dark(gen);
  }
  out.detected = static_cast<std::uint32_t>(clicks);

  auto vac = stream_for(cfg.seed, domain, index, Stage::Vacuum);
  const bool vacuum_loss = vac.uniform() < cfg.noise.vacuum_loss_probability();
  auto presence = stream_for(cfg.seed, domain, index, Stage::Presence);
  const bool presence_fail = presence.uniform() < cfg.noise.presence_test_error;

  if (heated_out) {
    out.loss_cause = LossCause::ProbeHeating;
  } else if (vacuum_loss) {
    out.loss_cause = LossCause::Vacuum;
  } else if (presence_fail) {
    out.loss_cause = LossCause::PresenceTest;
  }
  out.lost = out.loss_cause != LossCause::None;
  out.post_selected = !out.lost;
  return out;
}

std::vector<TrialOutcome> simulate_trials(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  std::vector<TrialOutcome> out(config.trials);
  parallel_chunks<char>(config.trials, resolve_threads(threads),
                        [&](std::uint64_t b, std::uint64_t e, char&) {
                          for (std::uint64_t i = b; i < e; ++i) out[i] = simulate_trial(config, i);
                        });
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  const auto parts = parallel_chunks<ExperimentResult>(
      config.trials, resolve_threads(threads),
      [&](std::uint64_t b, std::uint64_t e, ExperimentResult& part) {
        part.histogram = CountHistogram(config.prepared_state);
        for (std::uint64_t i = b; i < e; ++i) {
          const TrialOutcome t = simulate_trial(config, i);
          part.losses.record(t);
          if (t.post_selected) part.histogram.add(t.detected);
        }
      });
  ExperimentResult total;
  total.histogram = CountHistogram(config.prepared_state);
  for (const auto& p : parts) {
    total.histogram.merge(p.histogram);
    total.losses.merge(p.losses);
  }
  return total;
}

PairedResult run_paired(const ExperimentConfig& config, unsigned threads) {
  ExperimentConfig c = config;
  PairedResult r;
  c.prepared_state = AtomState::Dark;
  r.dark = run_experiment(c, threads);
  c.prepared_state = AtomState::Bright;
  r.bright = run_experiment(c, threads);
  return r;
}

double predict_probe_loss(const ExperimentConfig& config, std::uint64_t trials, unsigned threads) {
  ExperimentConfig cfg = config;
  cfg.prepared_state = AtomState::Bright;
  cfg.validate();
  if (trials == 0) throw InvalidConfig("trials", "must be >= 1");

  const double kT = cfg.constants.k_boltzmann * cfg.trap.temperature_at_probe();
  const double depth = cfg.constants.k_boltzmann * cfg.trap.depth;
  const double per_event = cfg.trap.heating_per_scatter * recoil_energy(cfg.constants);

  // P(lost | m events offered) = P(E0 + m * per_event > depth) for m >= 1.
  auto conditional_loss = [&](std::uint64_t m) {
    if (m == 0) return 0.0;
    const double margin = depth - static_cast<double>(m) * per_event;
    if (kT <= 0) return margin < 0 ? 1.0 : 0.0;
    return thermal_tail(margin / kT);
  };

  // Per-trial terms are summed in index order so the estimate is independent of `threads`.
  std::vector<double> terms(trials);
  parallel_chunks<char>(trials, resolve_threads(threads),
                        [&](std::uint64_t b, std::uint64_t e, char&) {
                          for (std::uint64_t i = b; i < e; ++i) {
                            const ProbeDraw d = draw_probe(cfg, i);
                            terms[i] = conditional_loss(std::min(d.candidates, d.depump_at));
                          }
                        });
  double sum = 0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(trials);
}

}  // namespace readout
