#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "purcell/constants.hpp"
#include "purcell/errors.hpp"
#include "purcell/filter_geometry.hpp"
#include "purcell/network.hpp"
#include "purcell/resonance.hpp"

using namespace purcell;
using namespace purcell::network;

namespace {

double max_abs_diff(const Abcd& a, const Abcd& b) { return (a - b).cwiseAbs().maxCoeff(); }

std::vector<SweepSample> synthetic_lorentzian(double f0, double fwhm, double lo, double hi, std::size_t n,
                                              double amplitude = 1.0, double background = 0.0) {
  std::vector<SweepSample> out;
  for (double f : linear_grid(lo, hi, n)) {
    const double p = lorentzian_power(f, f0, fwhm, amplitude, background);
    out.push_back({f, Complex(std::sqrt(p), 0.0), true});
  }
  return out;
}

// Half-wave line shorted at both ends, weakly tapped at 0.3 of its length:
// two shorted stubs in parallel at the tap node.
CircuitNetwork half_wave(double f_half, double z) {
  Chain left, right;
  left.elements = {line(z, 0.3 * kPi, f_half)};
  right.elements = {line(z, 0.7 * kPi, f_half)};
  CircuitNetwork net;
  net.chain.elements = {series_capacitor(0.3e-15), series_capacitor(0.3e-15)};
  net.chain.branches = {SideBranch{1, left, Termination::kShort}, SideBranch{1, right, Termination::kShort}};
  return net;
}

}  // namespace

TEST_CASE("series inductor ABCD") {
  const double f = 5e9, l = 2e-9;
  const Abcd m = abcd_of_element(series_inductor(l), f);
  CHECK(std::abs(m(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(m(0, 1) - Complex(0.0, kTwoPi * f * l)) < 1e-9);
  CHECK(std::abs(m(1, 0)) == 0.0);
  CHECK(std::abs(m(1, 1) - 1.0) < 1e-15);
}

TEST_CASE("zero-length line is the identity") {
  const Abcd m = abcd_of_element(line(73.0, 0.0, 1e9), 6e9);
  CHECK(max_abs_diff(m, Abcd::Identity()) < 1e-15);
}

TEST_CASE("shunt capacitor is reciprocal") {
  const Abcd m = abcd_of_element(shunt_capacitor(1e-12), 6e9);
  CHECK(std::abs(std::abs(m.determinant()) - 1.0) < 1e-12);
}

TEST_CASE("non-finite values are rejected") {
  CHECK_THROWS_AS(abcd_of_element(series_inductor(std::nan("")), 1e9), ParameterError);
  CHECK_THROWS_AS(abcd_of_element(shunt_capacitor(1e-12), 0.0), ParameterError);
  CHECK_THROWS_AS(abcd_of_element(line(50.0, -1.0, 1e9), 1e9), ParameterError);
}

TEST_CASE("cascade") {
  SUBCASE("identities") {
    const std::vector<Abcd> ms = {Abcd::Identity(), Abcd::Identity()};
    CHECK(max_abs_diff(cascade(ms), Abcd::Identity()) < 1e-15);
  }
  SUBCASE("line phases add") {
    const double f = 4.2e9;
    const std::vector<Abcd> ms = {abcd_of_element(line(50.0, 0.7, 1e9), f), abcd_of_element(line(50.0, 1.1, 1e9), f)};
    CHECK(max_abs_diff(cascade(ms), abcd_of_element(line(50.0, 1.8, 1e9), f)) < 1e-12);
  }
  SUBCASE("matrix times inverse") {
    Abcd a;
    a << Complex(1.3, 0.2), Complex(4.0, -1.0), Complex(0.01, 0.3), Complex(0.9, 0.4);
    const std::vector<Abcd> ms = {a, a.inverse()};
    CHECK(max_abs_diff(cascade(ms), Abcd::Identity()) < 1e-12);
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(cascade(std::span<const Abcd>{}), ParameterError); }
}

TEST_CASE("matched line transmits fully") {
  CircuitNetwork net;
  net.chain.elements = {line(50.0, 2.3, 5e9)};
  const auto freqs = linear_grid(1e9, 10e9, 101);
  for (const auto& s : s21_sweep(net, freqs)) CHECK(std::abs(std::abs(s.s21) - 1.0) < 1e-12);
}

TEST_CASE("shorted half-wave line resonates at v/2l") {
  const double f_half = 7.1e9;
  const auto net = half_wave(f_half, 50.0);
  const auto peak = locate_resonance(net, {6e9, 8e9});
  CHECK(std::abs(peak.center_frequency - f_half) < 1e-3 * f_half);
}

TEST_CASE("s21 sweep flags singular samples instead of throwing") {
  // A zero-length shorted branch puts an ideal short across the line.
  CircuitNetwork net;
  Chain stub;
  stub.elements = {line(50.0, 0.0, 5e9)};
  net.chain.elements = {line(50.0, 0.3, 5e9)};
  net.chain.branches = {SideBranch{1, stub, Termination::kShort}};
  const std::vector<double> freqs = {2.5e9, 5e9, 10e9};
  std::vector<SweepSample> s;
  REQUIRE_NOTHROW(s = s21_sweep(net, freqs));
  REQUIRE(s.size() == 3);
  for (const auto& x : s) CHECK_FALSE(x.valid);
}

TEST_CASE("extract_resonance recovers a noiseless Lorentzian") {
  const double f0 = 6.3e9, fwhm = 10e6;
  const auto spec = synthetic_lorentzian(f0, fwhm, f0 - 50e6, f0 + 50e6, 2001, 0.8, 0.01);
  const auto peak = extract_resonance(spec, {f0 - 50e6, f0 + 50e6});
  CHECK(std::abs(peak.center_frequency - f0) < 1e3);
  CHECK(std::abs(peak.linewidth_fwhm / fwhm - 1.0) < 1e-3);
}

TEST_CASE("extract_resonance with 1% noise stays within 100 kHz") {
  const double f0 = 6.3e9, fwhm = 10e6;
  std::mt19937_64 eng(1234);
  std::normal_distribution<double> noise(0.0, 0.01);
  int worst_ok = 0;
  for (int seed = 0; seed < 100; ++seed) {
    auto spec = synthetic_lorentzian(f0, fwhm, f0 - 50e6, f0 + 50e6, 2001);
    for (auto& s : spec) s.s21 = Complex(std::sqrt(std::max(0.0, std::norm(s.s21) + noise(eng))), 0.0);
    const auto peak = extract_resonance(spec, {f0 - 50e6, f0 + 50e6});
    if (std::abs(peak.center_frequency - f0) < 100e3) ++worst_ok;
  }
  CHECK(worst_ok == 100);
}

TEST_CASE("extract_resonance error paths") {
  SUBCASE("too few samples") {
    const auto spec = synthetic_lorentzian(6e9, 1e6, 5.99e9, 6.01e9, 10);
    CHECK_THROWS_AS(extract_resonance(spec, {5.99e9, 6.01e9}), ParameterError);
  }
  SUBCASE("monotone window has no peak") {
    const auto spec = synthetic_lorentzian(6e9, 1e6, 6.01e9, 6.05e9, 200);
    CHECK_THROWS_AS(extract_resonance(spec, {6.01e9, 6.05e9}), NotFoundError);
  }
}

TEST_CASE("halving the frequency step barely moves the fitted center") {
  const auto net = half_wave(7.1e9, 50.0);
  const auto located = locate_resonance(net, {6.5e9, 7.5e9});
  const FrequencyWindow w{located.center_frequency - 5.0 * located.linewidth_fwhm,
                          located.center_frequency + 5.0 * located.linewidth_fwhm};
  const auto a = extract_resonance(s21_sweep(net, linear_grid(w.lo, w.hi, 201)), w);
  const auto b = extract_resonance(s21_sweep(net, linear_grid(w.lo, w.hi, 401)), w);
  CHECK(std::abs(a.center_frequency - b.center_frequency) < b.linewidth_fwhm / 100.0);
}

TEST_CASE("quarter-wave stub matches its lumped LC near resonance") {
  // Shorted quarter-wave stub of impedance Z near f0 behaves as a parallel LC
  // with C = pi / (4 omega0 Z) and L = 1 / (omega0^2 C).
  const double f0 = 6.5e9, z = 50.0;
  const double w0 = kTwoPi * f0;
  const double c = kPi / (4.0 * w0 * z);
  const double l = 1.0 / (w0 * w0 * c);

  // Shunt across a line between high-impedance ports: resistive loading, so
  // neither model is pulled off f0 by the measurement.
  auto probe = [&](const Chain& branch_chain, Termination t) {
    CircuitNetwork net;
    net.input_port_impedance = net.output_port_impedance = 5e4;
    net.chain.elements = {line(50.0, 0.0, f0)};
    net.chain.branches = {SideBranch{0, branch_chain, t}};
    return locate_resonance(net, {6.0e9, 7.0e9});
  };
  Chain stub;
  stub.elements = {line(z, kPi / 2.0, f0)};
  const auto distributed = probe(stub, Termination::kShort);

  Chain lumped;
  lumped.elements = {shunt_capacitor(c), shunt_inductor(l)};
  const auto lc = probe(lumped, Termination::kOpen);
  CHECK(std::abs(distributed.center_frequency - lc.center_frequency) < 0.05 * distributed.linewidth_fwhm);
}

TEST_CASE("filter geometry construction") {
  FilterGeometry g;
  for (int i = 0; i < 8; ++i) {
    g.resonators.push_back({"r" + std::to_string(i), i < 4 ? "ancilla" : "data", 6.2e9 + 1e8 * i, 5e-15, 50.0});
  }
  SUBCASE("eight resonators give eight side branches at the tap") {
    const auto loaded = filter_network(g, 0.3e-9, true);
    const auto bare = filter_network(g, 0.3e-9, false);
    CHECK(loaded.chain.branches.size() - bare.chain.branches.size() == 8);
  }
  SUBCASE("variants differ in where the SQUID sits") {
    const auto var = filter_network(g, 0.3e-9, false);
    g.variant = FilterVariant::kFixedBandwidth;
    const auto fix = filter_network(g, 0.3e-9, false);
    const std::vector<double> f = {6.5e9};
    CHECK(std::abs(s21_sweep(var, f)[0].s21 - s21_sweep(fix, f)[0].s21) > 1e-6);
  }
  SUBCASE("invalid tap fraction") {
    g.tap_fraction = 1.5;
    CHECK_THROWS_AS(validate(g), ParameterError);
  }
}
