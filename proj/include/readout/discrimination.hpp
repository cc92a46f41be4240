// Threshold discrimination of bright/dark photon-count distributions.
//
// A trial with more than n_c detected photons is classified bright, otherwise
// dark. For a threshold n_c the two misclassification rates are
//
//   eps_B = P_B(n <= n_c)      (bright atom read as dark)
//   eps_D = P_D(n >  n_c)      (dark atom read as bright)
//
// and the readout fidelity is F = 1 - (eps_B + eps_D) / 2. Every function
// here accepts either measured histograms or analytic Poisson distributions.
#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "readout/histogram.hpp"
#include "readout/montecarlo.hpp"
#include "readout/physics.hpp"

namespace readout {

/// Analytic Poisson count distribution.
struct PoissonCounts {
  double mean = 0.0;

  double pmf(std::int64_t n) const;
  double cdf(std::int64_t n) const;
  double survival(std::int64_t n) const;
  /// Count beyond which both tails are below double precision.
  std::uint32_t scan_limit() const;
};

template <typename D>
concept CountDistribution = requires(const D& d, std::int64_t n) {
  { d.cdf(n) } -> std::convertible_to<double>;
  { d.survival(n) } -> std::convertible_to<double>;
};

inline std::uint32_t scan_limit(const CountHistogram& h) { return h.max_count() + 1; }
inline std::uint32_t scan_limit(const PoissonCounts& p) { return p.scan_limit(); }

struct ClassificationErrors {
  double bright = 0.0;  // eps_B
  double dark = 0.0;    // eps_D
  double readout_error() const { return 0.5 * (bright + dark); }
};

template <CountDistribution Dark, CountDistribution Bright>
ClassificationErrors classification_errors(const Dark& dark, const Bright& bright,
                                           std::int64_t threshold) {
  return {bright.cdf(threshold), dark.survival(threshold)};
}

double fidelity(double epsilon_bright, double epsilon_dark);
inline double fidelity(const ClassificationErrors& e) { return fidelity(e.bright, e.dark); }

/// Maximum-likelihood Poisson mean (the sample mean). Throws NoDataError when empty.
double fit_poisson(const CountHistogram& hist);
/// Standard error of the fitted mean, sqrt(mean / kept_trials).
double fit_poisson_standard_error(const CountHistogram& hist);

struct ScanPoint {
  std::uint32_t threshold = 0;
  double epsilon_bright = 0.0;
  double epsilon_dark = 0.0;
  double epsilon = 0.0;
};

struct ThresholdScan {
  std::vector<ScanPoint> points;
  std::size_t best = 0;  // index into points
  const ScanPoint& optimum() const { return points.at(best); }
};

/// Readout error for every threshold from 0 to one past the larger scan limit.
/// The optimum is the first minimum, so ties resolve to the smaller threshold.
template <CountDistribution Dark, CountDistribution Bright>
ThresholdScan threshold_scan(const Dark& dark, const Bright& bright) {
  const std::uint32_t last = std::max(scan_limit(dark), scan_limit(bright));
  ThresholdScan scan;
  scan.points.reserve(last + 1);
  for (std::uint32_t nc = 0; nc <= last; ++nc) {
    const auto e = classification_errors(dark, bright, nc);
    scan.points.push_back({nc, e.bright, e.dark, e.readout_error()});
    // Differences at rounding level count as ties.
    const double incumbent = scan.points[scan.best].epsilon;
    if (scan.points.back().epsilon < incumbent * (1.0 - 1e-12)) scan.best = nc;
  }
  return scan;
}

struct BudgetRow {
  std::string source;
  double contribution = 0.0;
};

/// Everything the budget needs besides the noise channels.
struct BudgetInputs {
  double mean_dark = 0.0;    // background counts per probe
  double mean_bright = 0.0;  // fluorescence plus background
  double collection_efficiency = 0.0;
  double scattered_mean = 0.0;  // photons offered by a bright atom per probe
};

BudgetInputs budget_inputs(const PhysicalConstants& c, const ProbeConfig& probe,
                           const DetectorConfig& det);

struct ErrorBudget {
  std::vector<BudgetRow> rows;
  double total = 0.0;
  std::uint32_t threshold = 0;               // optimum with the actual background
  std::uint32_t threshold_no_background = 0; // optimum with zero background
  static const char* method();
};

/// Splits the summed misclassification eps_B + eps_D into four sources:
/// detector_dark_counts, detection_inefficiency, raman_transitions and
/// imperfect_preparation. See ErrorBudget::method() for the attribution rules.
ErrorBudget error_budget(const BudgetInputs& in, const NoiseConfig& noise, std::uint32_t threshold);

/// Same, at the threshold that is optimal for the analytic means.
ErrorBudget error_budget(const BudgetInputs& in, const NoiseConfig& noise);

/// Probability that a bright atom outside the stretched state, which falls
/// dark after a geometric number of scattering events, gives <= threshold counts.
double depumped_misclassification(const BudgetInputs& in, double depump_probability,
                                  std::uint32_t threshold);

struct DiscriminationReport {
  double epsilon_bright = 0.0;
  double epsilon_dark = 0.0;
  double fidelity = 0.0;
  std::uint32_t threshold = 0;
  double mean_dark = 0.0;
  double mean_bright = 0.0;
  std::vector<BudgetRow> budget;
  double confidence = 0.0;  // 1 sigma on fidelity
};

/// Optimal-threshold report for a measured pair of histograms. Budget left empty.
DiscriminationReport analyze(const CountHistogram& dark, const CountHistogram& bright);

/// 1 sigma statistical uncertainty of F from binomial errors on eps_B and eps_D.
double fidelity_uncertainty(const ClassificationErrors& e, std::uint64_t dark_trials,
                            std::uint64_t bright_trials);

struct ModelPoint {
  double depth = 0.0;
  double mean_bright = 0.0;
  double mean_dark = 0.0;
  double fidelity = 0.0;
  std::uint32_t threshold = 0;
};

/// Analytic Poisson fidelity at each depth, with the threshold re-optimized per point.
/// `schedule[i]` is the probe used at `depths[i]`.
std::vector<ModelPoint> model_fidelity_curve(const std::vector<double>& depths,
                                             const std::vector<ProbeConfig>& schedule,
                                             const PhysicalConstants& constants,
                                             const DetectorConfig& detector);

/// Indices i > 0 where the optimal threshold differs from point i - 1.
std::vector<std::size_t> threshold_changes(const std::vector<ModelPoint>& curve);

}  // namespace readout
