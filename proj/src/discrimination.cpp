#include "readout/discrimination.hpp"

#include <cmath>
#include <stdexcept>

namespace readout {

namespace {

double log_binomial_pmf(std::uint64_t trials, std::uint64_t k, double p) {
  const double n = static_cast<double>(trials);
  const double j = static_cast<double>(k);
  return std::lgamma(n + 1) - std::lgamma(j + 1) - std::lgamma(n - j + 1) + j * std::log(p) +
         (n - j) * std::log1p(-p);
}

double binomial_pmf(std::uint64_t trials, std::uint64_t k, double p) {
  if (k > trials) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == trials ? 1.0 : 0.0;
  return std::exp(log_binomial_pmf(trials, k, p));
}

}  // namespace

double PoissonCounts::pmf(std::int64_t n) const {
  if (n < 0) return 0.0;
  if (mean <= 0.0) return n == 0 ? 1.0 : 0.0;
  const double k = static_cast<double>(n);
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1));
}

double PoissonCounts::cdf(std::int64_t n) const {
  if (n < 0) return 0.0;
  if (mean <= 0.0) return 1.0;
  if (static_cast<double>(n) >= mean) return 1.0 - survival(n);
  double sum = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) sum += pmf(k);
  return sum;
}

double PoissonCounts::survival(std::int64_t n) const {
  if (n < 0) return 1.0;
  if (mean <= 0.0) return 0.0;
  if (static_cast<double>(n) < mean) return 1.0 - cdf(n);
  // Terms decrease monotonically above the mode.
  double sum = 0.0;
  for (std::int64_t k = n + 1;; ++k) {
    const double term = pmf(k);
    sum += term;
    if (term <= sum * 1e-18 || term < 1e-300) break;
  }
  return sum;
}

std::uint32_t PoissonCounts::scan_limit() const {
  return static_cast<std::uint32_t>(std::ceil(mean + 12.0 * std::sqrt(mean) + 25.0));
}

double fidelity(double epsilon_bright, double epsilon_dark) {
  if (!(epsilon_bright >= 0 && epsilon_bright <= 1 && epsilon_dark >= 0 && epsilon_dark <= 1)) {
    throw std::invalid_argument("classification errors must lie in [0, 1]");
  }
  return 1.0 - 0.5 * (epsilon_bright + epsilon_dark);
}

double fit_poisson(const CountHistogram& hist) {
  if (hist.empty()) throw NoDataError("cannot fit an empty histogram");
  return hist.mean();
}

double fit_poisson_standard_error(const CountHistogram& hist) {
  return std::sqrt(fit_poisson(hist) / static_cast<double>(hist.kept_trials()));
}

double fidelity_uncertainty(const ClassificationErrors& e, std::uint64_t dark_trials,
                            std::uint64_t bright_trials) {
  const double vb = e.bright * (1.0 - e.bright) / static_cast<double>(bright_trials);
  const double vd = e.dark * (1.0 - e.dark) / static_cast<double>(dark_trials);
  return 0.5 * std::sqrt(vb + vd);
}

DiscriminationReport analyze(const CountHistogram& dark, const CountHistogram& bright) {
  if (dark.empty()) throw NoDataError("dark histogram has no kept trials");
  if (bright.empty()) throw NoDataError("bright histogram has no kept trials");
  const ThresholdScan scan = threshold_scan(dark, bright);
  const ScanPoint& best = scan.optimum();
  DiscriminationReport r;
  r.epsilon_bright = best.epsilon_bright;
  r.epsilon_dark = best.epsilon_dark;
  r.fidelity = fidelity(best.epsilon_bright, best.epsilon_dark);
  r.threshold = best.threshold;
  r.mean_dark = fit_poisson(dark);
  r.mean_bright = fit_poisson(bright);
  r.confidence = fidelity_uncertainty({best.epsilon_bright, best.epsilon_dark},
                                      dark.kept_trials(), bright.kept_trials());
  return r;
}

BudgetInputs budget_inputs(const PhysicalConstants& c, const ProbeConfig& probe,
                           const DetectorConfig& det) {
  BudgetInputs in;
  in.mean_dark = expected_counts(c, probe, det, AtomState::Dark);
  in.mean_bright = expected_counts(c, probe, det, AtomState::Bright);
  in.collection_efficiency = det.collection_efficiency;
  in.scattered_mean = expected_scattered(c, probe);
  return in;
}

double depumped_misclassification(const BudgetInputs& in, double depump_probability,
                                  std::uint32_t threshold) {
  // S = min(N, K): N ~ Poisson(scattered_mean) offered events, K ~ Geometric(p)
  // the event that sends the atom dark. Counts = Binomial(S, eta) + Poisson(dark).
  const PoissonCounts offered{in.scattered_mean};
  const PoissonCounts background{in.mean_dark};
  const double p = depump_probability;
  auto at_least = [&](std::uint64_t s) {  // P(S >= s)
    if (s == 0) return 1.0;
    const double keep = p <= 0 ? 1.0 : std::pow(1.0 - p, static_cast<double>(s - 1));
    return offered.survival(static_cast<std::int64_t>(s) - 1) * keep;
  };

  std::vector<double> background_cdf(threshold + 1);
  for (std::uint32_t j = 0; j <= threshold; ++j) background_cdf[j] = background.cdf(j);

  const std::uint64_t last = offered.scan_limit();
  double total = 0.0;
  double tail_here = at_least(0);
  for (std::uint64_t s = 0; s <= last; ++s) {
    const double tail_next = at_least(s + 1);
    const double weight = tail_here - tail_next;
    tail_here = tail_next;
    if (weight <= 0) continue;
    double low = 0.0;
    for (std::uint32_t j = 0; j <= threshold && j <= s; ++j) {
      low += binomial_pmf(s, j, in.collection_efficiency) * background_cdf[threshold - j];
    }
    total += weight * low;
  }
  return total;
}

const char* ErrorBudget::method() {
  return "Contributions to eps_B + eps_D (readout error = total / 2). "
         "detector_dark_counts: rise of the optimal-threshold analytic Poisson error when the "
         "background is raised from zero to its configured value. "
         "detection_inefficiency: the optimal analytic error at zero background (P_B(n <= n_c)). "
         "raman_transitions: the per-sequence flip probability, each flip counted as a "
         "misclassification. imperfect_preparation: (1 - hyperfine fidelity) plus "
         "(1 - Zeeman fidelity) times the excess misclassification of a depumping atom at n_c.";
}

ErrorBudget error_budget(const BudgetInputs& in, const NoiseConfig& noise,
                         std::uint32_t threshold) {
  const double fluorescence = in.mean_bright - in.mean_dark;
  const ThresholdScan with_bg =
      threshold_scan(PoissonCounts{in.mean_dark}, PoissonCounts{in.mean_bright});
  const ThresholdScan without_bg =
      threshold_scan(PoissonCounts{0.0}, PoissonCounts{fluorescence});
  const double summed_bg = 2.0 * with_bg.optimum().epsilon;
  const double summed_clean = 2.0 * without_bg.optimum().epsilon;

  const double stretched = depumped_misclassification(in, 0.0, threshold);
  const double depumping =
      depumped_misclassification(in, noise.depump_probability_per_scatter, threshold);
  const double zeeman = (1.0 - noise.zeeman_prep_fidelity) * std::max(0.0, depumping - stretched);

  ErrorBudget b;
  b.threshold = with_bg.optimum().threshold;
  b.threshold_no_background = without_bg.optimum().threshold;
  b.rows = {
      {"detector_dark_counts", summed_bg - summed_clean},
      {"detection_inefficiency", summed_clean},
      {"raman_transitions", noise.raman_flip_probability},
      {"imperfect_preparation", (1.0 - noise.hyperfine_prep_fidelity) + zeeman},
  };
  for (const auto& r : b.rows) b.total += r.contribution;
  return b;
}

ErrorBudget error_budget(const BudgetInputs& in, const NoiseConfig& noise) {
  const ThresholdScan scan =
      threshold_scan(PoissonCounts{in.mean_dark}, PoissonCounts{in.mean_bright});
  return error_budget(in, noise, scan.optimum().threshold);
}

std::vector<ModelPoint> model_fidelity_curve(const std::vector<double>& depths,
                                             const std::vector<ProbeConfig>& schedule,
                                             const PhysicalConstants& constants,
                                             const DetectorConfig& detector) {
  if (schedule.size() != depths.size()) {
    throw std::invalid_argument("schedule must provide one probe setting per depth");
  }
  std::vector<ModelPoint> curve;
  curve.reserve(depths.size());
  for (std::size_t i = 0; i < depths.size(); ++i) {
    ModelPoint p;
    p.depth = depths[i];
    p.mean_dark = expected_counts(constants, schedule[i], detector, AtomState::Dark);
    p.mean_bright = expected_counts(constants, schedule[i], detector, AtomState::Bright);
    const auto scan = threshold_scan(PoissonCounts{p.mean_dark}, PoissonCounts{p.mean_bright});
    p.threshold = scan.optimum().threshold;
    p.fidelity = 1.0 - scan.optimum().epsilon;
    curve.push_back(p);
  }
  return curve;
}

std::vector<std::size_t> threshold_changes(const std::vector<ModelPoint>& curve) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].threshold != curve[i - 1].threshold) out.push_back(i);
  }
  return out;
}

}  // namespace readout
