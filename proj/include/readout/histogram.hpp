#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>

#include "readout/physics.hpp"

namespace readout {

/// Raised when an analysis step receives a histogram without any kept trials.
class NoDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Photon number -> frequency for one prepared state. Empty bins are not stored.
class CountHistogram {
 public:
  using Bins = std::map<std::uint32_t, std::uint64_t>;

  CountHistogram() = default;
  explicit CountHistogram(AtomState prepared) : prepared_(prepared) {}
  CountHistogram(AtomState prepared, const Bins& bins);

  void add(std::uint32_t n, std::uint64_t times = 1);
  void merge(const CountHistogram& other);

  std::uint64_t frequency(std::uint32_t n) const;
  std::uint64_t kept_trials() const { return kept_; }
  bool empty() const { return kept_ == 0; }
  AtomState prepared_state() const { return prepared_; }
  const Bins& bins() const { return bins_; }

  /// Largest observed count; 0 when empty.
  std::uint32_t max_count() const { return bins_.empty() ? 0 : bins_.rbegin()->first; }

  /// Fraction of kept trials with count <= n.
  double cdf(std::int64_t n) const;
  /// Fraction of kept trials with count > n.
  double survival(std::int64_t n) const;

  double mean() const;
  double variance() const;

  friend bool operator==(const CountHistogram&, const CountHistogram&) = default;

 private:
  AtomState prepared_ = AtomState::Dark;
  Bins bins_;
  std::uint64_t kept_ = 0;
};

}  // namespace readout
