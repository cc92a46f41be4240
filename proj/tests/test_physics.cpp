#include <doctest.h>

#include <cmath>

#include "readout/physics.hpp"

using namespace readout;

TEST_SUITE("physics") {

TEST_CASE("scattering rate") {
  const PhysicalConstants c;
  CHECK(scattering_rate(c, {0.0, 1e-3}) == 0.0);
  // (Gamma/2) s/(1+s) dt evaluated by hand with Gamma = 2 pi 6 MHz.
  CHECK(expected_scattered(c, {0.1, 1e-3}) == doctest::Approx(1713.596).epsilon(1e-6));
  CHECK(expected_scattered(c, {0.061, 1.5e-3}) == doctest::Approx(1625.574).epsilon(1e-6));
}

TEST_CASE("scattering rate is increasing in s and stays below Gamma/2") {
  const PhysicalConstants c;
  double previous = -1;
  for (double s = 1e-6; s <= 1e6; s *= 1.7) {
    const double r = scattering_rate(c, {s, 1.0});
    CHECK(r > previous);
    CHECK(r < 0.5 * c.gamma);
    previous = r;
  }
}

TEST_CASE("recoil energy") {
  PhysicalConstants c;
  const double er = recoil_energy(c);
  CHECK(er == doctest::Approx(2.50022e-30).epsilon(1e-5));
  CHECK(er / c.k_boltzmann == doctest::Approx(181.09e-9).epsilon(1e-4));
  CHECK(c.wave_number() * c.lambda == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));

  PhysicalConstants heavy = c;
  heavy.mass *= 2;
  CHECK(recoil_energy(heavy) == doctest::Approx(er / 2).epsilon(1e-14));
  PhysicalConstants red = c;
  red.lambda *= 2;
  CHECK(recoil_energy(red) == doctest::Approx(er / 4).epsilon(1e-14));
}

TEST_CASE("recoil budget") {
  const PhysicalConstants c;
  TrapConfig trap;
  trap.depth = 2e-3;
  CHECK(recoil_budget(c, trap) == doctest::Approx(5522.1).epsilon(1e-4));
  const double at_2mK = recoil_budget(c, trap);
  trap.depth = 1.4e-3;
  CHECK(recoil_budget(c, trap) == doctest::Approx(3865.5).epsilon(1e-4));
  trap.depth = 4e-3;
  CHECK(recoil_budget(c, trap) == doctest::Approx(2 * at_2mK).epsilon(1e-15));
  trap.depth = 1e-300;
  CHECK(recoil_budget(c, trap) == doctest::Approx(0.0));
}

TEST_CASE("expected counts") {
  const PhysicalConstants c;
  const ProbeConfig probe{0.061, 1.5e-3};
  DetectorConfig det;
  CHECK(expected_counts(c, probe, det, AtomState::Dark) == doctest::Approx(0.195));
  CHECK(expected_counts(c, probe, det, AtomState::Bright) == doctest::Approx(9.9484).epsilon(1e-4));
  det.collection_efficiency = 0;
  CHECK(expected_counts(c, probe, det, AtomState::Bright) ==
        expected_counts(c, probe, det, AtomState::Dark));
}

TEST_CASE("bright mean never below dark mean") {
  const PhysicalConstants c;
  for (double eta : {0.0, 1e-4, 0.006, 0.5, 1.0}) {
    for (double s : {0.0, 0.01, 0.1, 3.0}) {
      for (double dt : {0.0, 1e-4, 1.5e-3}) {
        const ProbeConfig p{s, dt};
        const DetectorConfig d{eta, 130.0};
        const double b = expected_counts(c, p, d, AtomState::Bright);
        const double k = expected_counts(c, p, d, AtomState::Dark);
        CHECK(b >= k);
        CHECK((b == k) == (eta * s * dt == 0.0));
      }
    }
  }
}

TEST_CASE("collection efficiency decomposition") {
  // lens solid angle x optics and fiber transmission x detector quantum efficiency
  const double product = 0.07 * 0.20 * 0.50;
  CHECK(product == doctest::Approx(0.007));
  CHECK(product / DetectorConfig{}.collection_efficiency < 1.2);
}

TEST_CASE("calibration maps the scatter onto a measured bright mean") {
  const PhysicalConstants c;
  const ProbeConfig probe{0.061, 1.5e-3};
  const DetectorConfig det;
  const double eta = calibrate_collection_efficiency(c, probe, det, 9.2, 0.0055, 0.006);
  CHECK(eta == doctest::Approx(0.0055396).epsilon(1e-4));
  CHECK(calibrate_collection_efficiency(c, probe, det, 50.0, 0.0055, 0.006) == 0.006);
  CHECK_THROWS_AS(calibrate_collection_efficiency(c, {0.0, 1e-3}, det, 9.2, 0, 1), InvalidConfig);
}

TEST_CASE("adiabatic temperature scaling") {
  TrapConfig trap;
  trap.depth = 2.2e-3;
  CHECK(trap.temperature_at_probe() == doctest::Approx(35e-6));
  trap.depth = 0.55e-3;
  CHECK(trap.temperature_at_probe() == doctest::Approx(17.5e-6));
  trap.reference_depth = 0;
  CHECK(trap.temperature_at_probe() == 35e-6);
}

TEST_CASE("validation rejects out-of-range values") {
  PhysicalConstants c;
  c.mass = 0;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  TrapConfig t;
  t.depth = 0;
  CHECK_THROWS_AS(t.validate(), InvalidConfig);
  CHECK_THROWS_AS((ProbeConfig{-1.0, 1e-3}.validate()), InvalidConfig);
  CHECK_THROWS_AS((DetectorConfig{1.5, 0}.validate()), InvalidConfig);
  try {
    DetectorConfig{0.1, -1}.validate();
    FAIL("expected InvalidConfig");
  } catch (const InvalidConfig& e) {
    CHECK(e.key() == "detector.dark_count_rate_per_s");
  }
}

}  // TEST_SUITE
