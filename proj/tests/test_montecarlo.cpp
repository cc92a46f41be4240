#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <set>

#include "readout/montecarlo.hpp"
#include "readout/rng.hpp"

using namespace readout;

namespace {

ExperimentConfig baseline(AtomState state, std::uint64_t trials) {
  ExperimentConfig c;
  c.prepared_state = state;
  c.trials = trials;
  c.seed = 2024;
  return c;
}

// Pearson chi-square against Poisson(mean), pooling bins with expectation < 5.
double poisson_gof_p_value(const CountHistogram& h, double mean) {
  const boost::math::poisson_distribution<double> pois(mean);
  const double n = static_cast<double>(h.kept_trials());
  double chi2 = 0, pooled_obs = 0, pooled_exp = 0, tail_prob = 1;
  int cells = 0;
  for (std::uint32_t k = 0;; ++k) {
    const double p = boost::math::pdf(pois, k);
    tail_prob -= p;
    pooled_obs += static_cast<double>(h.frequency(k));
    pooled_exp += n * p;
    if (pooled_exp >= 5 && n * tail_prob >= 5) {
      chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
      ++cells;
      pooled_obs = pooled_exp = 0;
    }
    if (n * tail_prob < 5 && k > mean) {
      double rest = 0;
      for (const auto& [m, f] : h.bins())
        if (m > k) rest += static_cast<double>(f);
      pooled_obs += rest;
      pooled_exp += n * tail_prob;
      chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
      ++cells;
      break;
    }
  }
  REQUIRE(cells >= 2);
  const boost::math::chi_squared_distribution<double> dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("stream derivation separates every coordinate") {
  std::set<std::uint64_t> first;
  for (std::uint64_t seed : {1ull, 2ull})
    for (std::uint64_t dom : {0ull, 1ull})
      for (std::uint64_t trial : {0ull, 1ull, 1ull << 40})
        for (Stage st : {Stage::Preparation, Stage::Detection, Stage::Background}) {
          auto g = stream_for(seed, dom, trial, st);
          first.insert(g());
        }
  CHECK(first.size() == 2 * 2 * 3 * 3);

  auto a = stream_for(5, 0, 3, Stage::Scatter);
  auto b = stream_for(5, 0, 3, Stage::Scatter);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("noise defaults") {
  const NoiseConfig n;
  CHECK(n.vacuum_loss_probability() == doctest::Approx(-std::expm1(-0.092 / 23)).epsilon(1e-14));
  CHECK(n.vacuum_loss_probability() == doctest::Approx(0.003992).epsilon(1e-3));
  const NoiseConfig off = NoiseConfig::noiseless();
  CHECK(off.vacuum_loss_probability() == 0.0);
  CHECK(off.raman_flip_probability == 0.0);
  CHECK(off.presence_test_error == 0.0);
  CHECK(off.hyperfine_prep_fidelity == 1.0);
  CHECK(off.zeeman_prep_fidelity == 1.0);

  NoiseConfig bad;
  bad.raman_flip_probability = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = NoiseConfig{};
  bad.vacuum_lifetime = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = NoiseConfig{};
  bad.sequence_wall_time = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}

TEST_CASE("a silent dark atom detects nothing") {
  ExperimentConfig c = baseline(AtomState::Dark, 1000);
  c.noise = NoiseConfig::noiseless();
  c.detector.dark_count_rate = 0;
  for (std::uint64_t i = 0; i < c.trials; ++i) {
    const auto t = simulate_trial(c, i);
    CHECK(t.detected == 0);
    CHECK(t.scattered == 0);
    CHECK(t.post_selected);
  }
}

TEST_CASE("trial outcome invariants") {
  for (AtomState s : {AtomState::Dark, AtomState::Bright}) {
    ExperimentConfig c = baseline(s, 20000);
    c.noise.raman_flip_probability = 0.05;
    c.noise.zeeman_prep_fidelity = 0.9;
    c.noise.hyperfine_prep_fidelity = 0.95;
    c.noise.presence_test_error = 0.05;
    c.trap.depth = 0.3e-3;
    for (const auto& t : simulate_trials(c, 2)) {
      CHECK(t.post_selected == !t.lost);
      CHECK(t.lost == (t.loss_cause != LossCause::None));
      if (t.effective_state_at_probe == AtomState::Dark && !t.raman_flipped) CHECK(t.scattered == 0);
      if (t.scattered == 0 && t.detected > 0) CHECK(c.detector.dark_count_rate > 0);
    }
  }
}

TEST_CASE("dark preparation without Raman flips never scatters") {
  ExperimentConfig c = baseline(AtomState::Dark, 50000);
  c.noise.raman_flip_probability = 0;
  c.noise.hyperfine_prep_fidelity = 0.9;
  for (const auto& t : simulate_trials(c, 1)) CHECK(t.scattered == 0);
}

TEST_CASE("run_experiment conserves trials") {
  for (std::uint64_t n : {1ull, 2ull, 17ull, 5000ull}) {
    ExperimentConfig c = baseline(AtomState::Bright, n);
    c.noise.presence_test_error = 0.3;
    const auto r = run_experiment(c, 3);
    CHECK(r.losses.trials == n);
    CHECK(r.losses.kept + r.losses.lost() == n);
    CHECK(r.histogram.kept_trials() == r.losses.kept);
  }
}

TEST_CASE("single trial gives a histogram of total one or zero") {
  ExperimentConfig c = baseline(AtomState::Bright, 1);
  const auto r = run_experiment(c, 1);
  const auto t = simulate_trial(c, 0);
  CHECK(r.histogram.kept_trials() == (t.post_selected ? 1u : 0u));
  CHECK(r.empty() == !t.post_selected);
}

TEST_CASE("all trials lost gives an explicit empty histogram") {
  ExperimentConfig c = baseline(AtomState::Dark, 200);
  c.noise.presence_test_error = 1.0;
  const auto r = run_experiment(c, 1);
  CHECK(r.empty());
  CHECK(r.losses.presence_test == 200);
  CHECK_THROWS_AS(r.histogram.mean(), NoDataError);
}

TEST_CASE("results are identical for every thread count") {
  for (AtomState s : {AtomState::Dark, AtomState::Bright}) {
    const ExperimentConfig c = baseline(s, 30011);
    const auto ref = run_experiment(c, 1);
    for (unsigned threads : {2u, 3u, 7u, 16u}) {
      const auto r = run_experiment(c, threads);
      CHECK(r.histogram == ref.histogram);
      CHECK(r.losses == ref.losses);
    }
    CHECK(run_experiment(c, 1).histogram == ref.histogram);
  }
  ExperimentConfig c = baseline(AtomState::Bright, 4001);
  CHECK(predict_probe_loss(c, 4001, 1) == predict_probe_loss(c, 4001, 5));
}

TEST_CASE("different seeds give different histograms") {
  ExperimentConfig a = baseline(AtomState::Bright, 5000);
  ExperimentConfig b = a;
  b.seed = a.seed + 1;
  CHECK_FALSE(run_experiment(a, 1).histogram == run_experiment(b, 1).histogram);
}

TEST_CASE("dark mean over 9700 trials") {
  const auto r = run_experiment(baseline(AtomState::Dark, 9700), 0);
  const double sigma = std::sqrt(0.195 / 9700);
  CHECK(std::abs(r.histogram.mean() - 0.195) < 3 * sigma);
}

TEST_CASE("bright baseline mean and probe loss") {
  const auto r = run_experiment(baseline(AtomState::Bright, 100000), 0);
  CHECK(r.histogram.mean() >= 9.2);
  CHECK(r.histogram.mean() <= 10.0);
  CHECK(r.losses.fraction(r.losses.probe_heating) < 0.02);
}

TEST_CASE("noise-free histograms are Poisson") {
  const PhysicalConstants pc;
  const ProbeConfig probe{0.061, 1.5e-3};
  const DetectorConfig det;
  for (AtomState s : {AtomState::Dark, AtomState::Bright}) {
    ExperimentConfig c = baseline(s, 100000);
    c.noise = NoiseConfig::noiseless();
    c.trap.depth = 1.0;  // deep enough that heating never removes the atom
    const auto r = run_experiment(c, 0);
    REQUIRE(r.histogram.kept_trials() == c.trials);
    const double mean = expected_counts(pc, probe, det, s);
    const double p = poisson_gof_p_value(r.histogram, mean);
    INFO("state " << (s == AtomState::Bright ? "bright" : "dark") << " p=" << p);
    CHECK(p > 0.001);
  }
}

TEST_CASE("probe-heating loss is non-increasing in trap depth") {
  ExperimentConfig c = baseline(AtomState::Bright, 20000);
  c.probe = {0.1, 1e-3};
  double previous_sim = 1.1, previous_pred = 1.1;
  for (double depth_mK : {0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.4, 2.5}) {
    c.trap.depth = depth_mK * 1e-3;
    const auto r = run_experiment(c, 0);
    const double sim = r.losses.fraction(r.losses.probe_heating);
    const double pred = predict_probe_loss(c, c.trials, 0);
    CHECK(sim <= previous_sim);
    CHECK(pred <= previous_pred);
    previous_sim = sim;
    previous_pred = pred;
  }
  CHECK(previous_pred < 1e-6);
}

TEST_CASE("predicted loss agrees with the simulated loss") {
  ExperimentConfig c = baseline(AtomState::Bright, 100000);
  c.noise = NoiseConfig::noiseless();
  c.trap.depth = 0.25e-3;
  c.probe = {0.1, 3e-3};
  const auto r = run_experiment(c, 0);
  const double sim = r.losses.fraction(r.losses.probe_heating);
  const double pred = predict_probe_loss(c, c.trials, 0);
  const double se = std::sqrt(pred * (1 - pred) / static_cast<double>(c.trials));
  INFO("sim " << sim << " pred " << pred);
  CHECK(sim > 0.01);
  CHECK(std::abs(sim - pred) < 4 * se + 1e-4);
}

TEST_CASE("predicted loss is zero without light") {
  ExperimentConfig c = baseline(AtomState::Bright, 10);
  c.probe.saturation = 0;
  CHECK(predict_probe_loss(c, 1000) == 0.0);
  c.probe = {0.061, 0.0};
  CHECK(predict_probe_loss(c, 1000) == 0.0);
}

TEST_CASE("intrinsic losses match the configured channels") {
  ExperimentConfig c = baseline(AtomState::Dark, 100000);
  const auto r = run_experiment(c, 0);
  const double n = 1e5;
  const double vac = c.noise.vacuum_loss_probability();
  // presence test only counts trials that survived vacuum loss
  const double pres = (1 - vac) * c.noise.presence_test_error;
  CHECK(std::abs(r.losses.fraction(r.losses.vacuum) - vac) < 3 * std::sqrt(vac * (1 - vac) / n));
  CHECK(std::abs(r.losses.fraction(r.losses.presence_test) - pres) <
        3 * std::sqrt(pres * (1 - pres) / n));
  CHECK(r.losses.probe_heating == 0);
}

TEST_CASE("Raman flips brighten dark atoms") {
  ExperimentConfig c = baseline(AtomState::Dark, 20000);
  c.noise = NoiseConfig::noiseless();
  c.noise.raman_flip_probability = 0.1;
  c.detector.dark_count_rate = 0;
  std::uint64_t flipped = 0, lit = 0;
  for (const auto& t : simulate_trials(c, 0)) {
    flipped += t.raman_flipped;
    if (t.scattered > 0) {
      CHECK(t.raman_flipped);
      ++lit;
    }
  }
  CHECK(std::abs(static_cast<double>(flipped) / 20000 - 0.1) < 0.01);
  CHECK(lit > flipped * 9 / 10);
}

TEST_CASE("imperfect Zeeman preparation shortens the fluorescence") {
  ExperimentConfig c = baseline(AtomState::Bright, 20000);
  c.noise = NoiseConfig::noiseless();
  c.trap.depth = 1.0;
  const double full = run_experiment(c, 0).histogram.mean();
  c.noise.zeeman_prep_fidelity = 0.0;
  c.noise.depump_probability_per_scatter = 1e-2;
  const double depumped = run_experiment(c, 0).histogram.mean();
  // geometric depumping after ~100 events caps the scatter far below 1626
  CHECK(depumped < 0.1 * full);
  CHECK(depumped > 0.0);
}

TEST_CASE("hyperfine errors darken bright preparations only") {
  ExperimentConfig c = baseline(AtomState::Bright, 10000);
  c.noise = NoiseConfig::noiseless();
  c.noise.hyperfine_prep_fidelity = 0.0;
  for (const auto& t : simulate_trials(c, 1)) CHECK(t.effective_state_at_probe == AtomState::Dark);
  c.prepared_state = AtomState::Dark;
  for (const auto& t : simulate_trials(c, 1)) CHECK(t.effective_state_at_probe == AtomState::Dark);
}

TEST_CASE("invalid experiment configs are rejected") {
  ExperimentConfig c = baseline(AtomState::Dark, 0);
  CHECK_THROWS_AS(run_experiment(c, 1), InvalidConfig);
  c.trials = 10;
  c.detector.collection_efficiency = -0.1;
  CHECK_THROWS_AS(run_experiment(c, 1), InvalidConfig);
}

}  // TEST_SUITE
