#include "readout/histogram.hpp"

namespace readout {

CountHistogram::CountHistogram(AtomState prepared, const Bins& bins) : prepared_(prepared) {
  for (const auto& [n, f] : bins) add(n, f);
}

void CountHistogram::add(std::uint32_t n, std::uint64_t times) {
  if (times == 0) return;
  bins_[n] += times;
  kept_ += times;
}

void CountHistogram::merge(const CountHistogram& other) {
  for (const auto& [n, f] : other.bins_) add(n, f);
}

std::uint64_t CountHistogram::frequency(std::uint32_t n) const {
  const auto it = bins_.find(n);
  return it == bins_.end() ? 0 : it->second;
}

double CountHistogram::cdf(std::int64_t n) const {
  if (kept_ == 0) throw NoDataError("histogram has no kept trials");
  if (n < 0) return 0.0;
  std::uint64_t below = 0;
  for (const auto& [k, f] : bins_) {
    if (static_cast<std::int64_t>(k) > n) break;
    below += f;
  }
  return static_cast<double>(below) / static_cast<double>(kept_);
}

double CountHistogram::survival(std::int64_t n) const {
  if (kept_ == 0) throw NoDataError("histogram has no kept trials");
  std::uint64_t above = 0;
  for (const auto& [k, f] : bins_) {
    if (static_cast<std::int64_t>(k) > n) above += f;
  }
  return static_cast<double>(above) / static_cast<double>(kept_);
}

double CountHistogram::mean() const {
  if (kept_ == 0) throw NoDataError("histogram has no kept trials");
  double sum = 0;
  for (const auto& [n, f] : bins_) sum += static_cast<double>(n) * static_cast<double>(f);
  return sum / static_cast<double>(kept_);
}

double CountHistogram::variance() const {
  const double m = mean();
  double sum = 0;
  for (const auto& [n, f] : bins_) {
    const double d = static_cast<double>(n) - m;
    sum += d * d * static_cast<double>(f);
  }
  return sum / static_cast<double>(kept_);
}

}  // namespace readout
