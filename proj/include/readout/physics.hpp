// Closed-form photon-scattering, recoil and count-rate formulas for the
// fluorescence readout of a single trapped atom. Everything is SI.
#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace readout {

/// Raised when a configuration value violates a type invariant.
class InvalidConfig : public std::invalid_argument {
 public:
  InvalidConfig(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

enum class AtomState { Bright, Dark };

inline const char* to_string(AtomState s) { return s == AtomState::Bright ? "bright" : "dark"; }

namespace si {
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double k_boltzmann = 1.380649e-23;    // J/K
inline constexpr double atomic_mass = 1.66053906660e-27;  // kg
}  // namespace si

/// Atomic and universal constants. Defaults are the 87Rb D2 line.
struct PhysicalConstants {
  double gamma = 2.0 * std::numbers::pi * 6.0e6;  // rad/s
  double i_sat = 16.7;                            // W/m^2
  double lambda = 780.0e-9;                       // m
  double mass = 86.909180527 * si::atomic_mass;   // kg
  double hbar = si::hbar;
  double k_boltzmann = si::k_boltzmann;

  double wave_number() const { return 2.0 * std::numbers::pi / lambda; }
  void validate() const;
};

struct TrapConfig {
  double depth = 1.4e-3;             // K (U / k_B)
  double atom_temperature = 35e-6;   // K, measured at reference_depth
  double heating_per_scatter = 2.0;  // recoil energies per scattering event
  // The atom temperature is quoted in a trap of this depth; the trap is ramped
  // adiabatically to `depth` before probing, so T scales as sqrt(depth / reference).
  // Zero disables the rescaling.
  double reference_depth = 2.2e-3;  // K

  /// Temperature at the probe depth after the adiabatic ramp.
  double temperature_at_probe() const;
  void validate() const;
};

struct ProbeConfig {
  double saturation = 0.061;  // s = I / I_sat
  double duration = 1.5e-3;   // s
  void validate() const;
};

struct DetectorConfig {
  double collection_efficiency = 0.006;
  double dark_count_rate = 130.0;  // counts/s
  void validate() const;
};

/// Scattering rate (Gamma/2) s/(1+s) of a two-level atom on resonance.
double scattering_rate(const PhysicalConstants& c, const ProbeConfig& probe);

/// Mean number of photons scattered during the whole probe pulse.
inline double expected_scattered(const PhysicalConstants& c, const ProbeConfig& probe) {
  return scattering_rate(c, probe) * probe.duration;
}

/// hbar^2 k^2 / 2m.
double recoil_energy(const PhysicalConstants& c);

/// Number of scattering events that raise the atom's energy by the trap depth.
double recoil_budget(const PhysicalConstants& c, const TrapConfig& trap);

/// Mean detected count (collected fluorescence plus detector background).
double expected_counts(const PhysicalConstants& c, const ProbeConfig& probe,
                       const DetectorConfig& det, AtomState state);

/// s = I / I_sat.
double saturation_from_intensity(const PhysicalConstants& c, double intensity);

/// Collection efficiency that maps the expected scatter onto a measured bright
/// mean, clamped into [lo, hi].
double calibrate_collection_efficiency(const PhysicalConstants& c, const ProbeConfig& probe,
                                       const DetectorConfig& det, double measured_bright_mean,
                                       double lo, double hi);

}  // namespace readout
