#include <cmath>
#include <vector>

#include "doctest.h"
#include "purcell/constants.hpp"
#include "purcell/errors.hpp"
#include "purcell/filter_geometry.hpp"
#include "purcell/filter_tuning.hpp"

using namespace purcell;
using namespace purcell::filter;

namespace {

FilterParams example_params() {
  FilterParams p;
  p.critical_current = 0.66e-6;
  p.bare_frequency = angular(ghz(7.0));
  p.bare_inductance = nh(2.0);
  p.physical_length = 8e-3;
  p.per_unit_length_inductance = nh(2.0) / p.physical_length;
  p.filter_impedance = 50.0 / 1.5;
  p.port_resistance = 50.0;
  p.input_quality = 700.0;
  return p;
}

}  // namespace

TEST_CASE("squid inductance") {
  const auto p = example_params();
  const double l0 = squid_inductance(p, 0.0);
  CHECK(l0 == doctest::Approx(kFluxQuantum / (4.0 * kPi * 0.66e-6)).epsilon(1e-14));
  CHECK(l0 == doctest::Approx(0.249e-9).epsilon(2e-3));
  CHECK(squid_inductance(p, flux_from_quanta(1.0)) == doctest::Approx(l0).epsilon(1e-12));
  CHECK(squid_inductance(p, flux_from_quanta(1.0 / 3.0)) == doctest::Approx(2.0 * l0).epsilon(1e-12));
  CHECK(squid_inductance(p, flux_from_quanta(-0.21)) == squid_inductance(p, flux_from_quanta(0.21)));
  CHECK_THROWS_AS(squid_inductance(p, flux_from_quanta(0.5)), DivergenceError);
  CHECK_THROWS_AS(squid_inductance(p, flux_from_quanta(-1.5 + 1e-7)), DivergenceError);
  CHECK_NOTHROW(squid_inductance(p, flux_from_quanta(0.5 - 1e-5)));
}

TEST_CASE("filter frequency") {
  const auto p = example_params();
  CHECK(filter_frequency(p, 0.0) == p.bare_frequency);
  CHECK(cyclic(filter_frequency(p, nh(0.18))) / 1e9 == doctest::Approx(7.0 / 1.09).epsilon(1e-12));
  CHECK(cyclic(filter_frequency(p, nh(0.18))) / 1e9 == doctest::Approx(6.422).epsilon(1e-4));
  CHECK(filter_frequency(p, p.bare_inductance) == doctest::Approx(p.bare_frequency / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(filter_frequency(p, -1e-12), ParameterError);
  double prev = filter_frequency(p, 0.0);
  for (int i = 1; i < 50; ++i) {
    const double w = filter_frequency(p, nh(0.05 * i));
    CHECK(w < prev);
    prev = w;
  }
}

TEST_CASE("output and total quality") {
  const auto p = example_params();
  const double lt = p.total_inductance();
  CHECK(output_quality(p, lt / 2.0) == doctest::Approx(p.base_quality()).epsilon(1e-14));
  CHECK(output_quality(p, lt / 6.0) == doctest::Approx(4.0 * p.base_quality()).epsilon(1e-12));
  CHECK_THROWS_AS(output_quality(p, 0.0), DivergenceError);
  CHECK_THROWS_AS(output_quality(p, lt), DivergenceError);
  for (int i = 1; i < 40; ++i) {
    const double l = lt * i / 40.0;
    const double s = std::sin(kPi * l / lt);
    CHECK(output_quality(p, l) * s * s == doctest::Approx(p.base_quality()).epsilon(1e-9));
  }
  CHECK(total_quality(100.0, 100.0) == doctest::Approx(50.0));
  CHECK(total_quality(7.0, 700.0) == doctest::Approx(6.93).epsilon(1e-3));
  CHECK(total_quality(40.0, 1e300) == doctest::Approx(40.0));
}

TEST_CASE("tuning curve") {
  const auto p = example_params();
  std::vector<double> fluxes;
  for (int i = -40; i <= 40; ++i) fluxes.push_back(flux_from_quanta(0.01 * i));
  const auto curve = tuning_curve(p, fluxes);
  std::size_t best = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    REQUIRE(curve[i].valid);
    CHECK(curve[i].linewidth == doctest::Approx(curve[i].frequency / curve[i].quality).epsilon(1e-14));
    if (curve[i].frequency > curve[best].frequency) best = i;
    const auto& mirror = curve[curve.size() - 1 - i];
    CHECK(curve[i].frequency == mirror.frequency);
    CHECK(curve[i].linewidth == mirror.linewidth);
  }
  CHECK(curve[best].flux == 0.0);

  const std::vector<double> singular = {0.0, flux_from_quanta(0.5)};
  const auto flagged = tuning_curve(p, singular);
  CHECK(flagged[0].valid);
  CHECK_FALSE(flagged[1].valid);
}

TEST_CASE("calibrated parameters hit both regimes") {
  const RegimeTargets t{ghz(6.362), mhz(900), ghz(6.949), mhz(170)};
  const auto cal = calibrate_params(t, nh(3.12), 8e-3, 700.0);
  const std::vector<double> fluxes = {cal.read_off_flux, cal.read_on_flux};
  const auto curve = tuning_curve(cal.params, fluxes);
  CHECK(cyclic(curve[0].frequency) == doctest::Approx(t.read_off_frequency).epsilon(1e-6));
  CHECK(cyclic(curve[0].linewidth) == doctest::Approx(t.read_off_linewidth).epsilon(1e-6));
  CHECK(cyclic(curve[1].frequency) == doctest::Approx(t.read_on_frequency).epsilon(1e-6));
  CHECK(cyclic(curve[1].linewidth) == doctest::Approx(t.read_on_linewidth).epsilon(1e-6));
  CHECK(curve[1].quality == doctest::Approx(7.07).epsilon(1e-2));
  CHECK(curve[0].quality > 35.0);
  CHECK(curve[0].quality < 45.0);
}

TEST_CASE("closed form agrees with the simulated filter") {
  network::FilterGeometry seed;
  seed.input_coupling = ff(10);
  const network::FilterTargets t{ghz(6.362), mhz(900), ghz(6.949), mhz(170)};
  const auto cal = network::calibrate_filter(seed, nh(0.5), nh(0.2), t);
  std::vector<double> ls;
  for (int i = 0; i <= 6; ++i) {
    ls.push_back(cal.read_off_inductance + (cal.read_on_inductance - cal.read_off_inductance) * i / 6.0);
  }
  const auto params = match_network(cal.geometry, ls, 8e-3, 0.8e-6);
  for (double l : ls) {
    const auto peak = network::measure_filter(cal.geometry, l);
    const double w = filter_frequency(params, l);
    const double q = total_quality(output_quality(params, l), params.input_quality);
    CHECK(cyclic(w) == doctest::Approx(peak.center_frequency).epsilon(0.01));
    CHECK(cyclic(w / q) == doctest::Approx(peak.linewidth_fwhm).epsilon(0.15));
  }
}
