#include "readout/physics.hpp"

#include <algorithm>
#include <cmath>

namespace readout {

namespace {
void require(bool ok, const char* key, const char* what) {
  if (!ok) throw InvalidConfig(key, what);
}
}  // namespace

void PhysicalConstants::validate() const {
  require(gamma > 0, "constants.linewidth_MHz", "must be > 0");
  require(i_sat > 0, "constants.saturation_intensity_mW_per_cm2", "must be > 0");
  require(lambda > 0, "constants.wavelength_nm", "must be > 0");
  require(mass > 0, "constants.mass_amu", "must be > 0");
  require(hbar > 0, "constants.hbar", "must be > 0");
  require(k_boltzmann > 0, "constants.k_boltzmann", "must be > 0");
}

double TrapConfig::temperature_at_probe() const {
  if (reference_depth <= 0) return atom_temperature;
  return atom_temperature * std::sqrt(depth / reference_depth);
}

void TrapConfig::validate() const {
  require(depth > 0, "trap.depth_mK", "must be > 0");
  require(atom_temperature >= 0, "trap.temperature_uK", "must be >= 0");
  require(heating_per_scatter >= 0, "trap.heating_per_scatter", "must be >= 0");
  require(reference_depth >= 0, "trap.reference_depth_mK", "must be >= 0");
}

void ProbeConfig::validate() const {
  require(saturation >= 0, "probe.saturation", "must be >= 0");
  require(duration >= 0, "probe.duration_ms", "must be >= 0");
}

void DetectorConfig::validate() const {
  require(collection_efficiency >= 0 && collection_efficiency <= 1,
          "detector.collection_efficiency", "must be in [0, 1]");
  require(dark_count_rate >= 0, "detector.dark_count_rate_per_s", "must be >= 0");
}

double scattering_rate(const PhysicalConstants& c, const ProbeConfig& probe) {
  const double s = probe.saturation;
  return 0.5 * c.gamma * s / (1.0 + s);
}

double recoil_energy(const PhysicalConstants& c) {
  const double k = c.wave_number();
  return c.hbar * c.hbar * k * k / (2.0 * c.mass);
}

double recoil_budget(const PhysicalConstants& c, const TrapConfig& trap) {
  return c.k_boltzmann * trap.depth / (trap.heating_per_scatter * recoil_energy(c));
}

double expected_counts(const PhysicalConstants& c, const ProbeConfig& probe,
                       const DetectorConfig& det, AtomState state) {
  const double background = det.dark_count_rate * probe.duration;
  if (state == AtomState::Dark) return background;
  return det.collection_efficiency * expected_scattered(c, probe) + background;
}

double saturation_from_intensity(const PhysicalConstants& c, double intensity) {
  return intensity / c.i_sat;
}

double calibrate_collection_efficiency(const PhysicalConstants& c, const ProbeConfig& probe,
                                       const DetectorConfig& det, double measured_bright_mean,
                                       double lo, double hi) {
  const double scattered = expected_scattered(c, probe);
  if (scattered <= 0) throw InvalidConfig("probe", "no scattering to calibrate against");
  const double eta = (measured_bright_mean - det.dark_count_rate * probe.duration) / scattered;
  return std::clamp(eta, lo, hi);
}

}  // namespace readout
