#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "purcell/errors.hpp"
#include "purcell/measurement.hpp"
#include "purcell/rng.hpp"

using namespace purcell;
using namespace purcell::measurement;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ReadoutPulseSpec spec_with(double snr, double t1) {
  ReadoutPulseSpec s;
  s.label = "q";
  s.snr = snr;
  s.t1_readout = t1;
  return s;
}

double binomial_sigma(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

}  // namespace

TEST_CASE("separation error") {
  CHECK(separation_error(0.0) == 0.5);
  CHECK(separation_error(16.0) == doctest::Approx(0.5 * std::erfc(2.0)).epsilon(1e-14));
  CHECK(separation_error(16.0) == doctest::Approx(2.34e-3).epsilon(1e-2));
  const double snr_q1 = snr_for_separation_error(3e-4);
  // Independent inversion: erfc(x) = 6e-4 at x = 2.4265178, SNR = (2x)^2.
  CHECK(snr_q1 == doctest::Approx(23.55195).epsilon(1e-5));
  CHECK(separation_error(snr_q1) == doctest::Approx(3e-4).epsilon(1e-10));
  double prev = 0.5;
  for (int i = 1; i < 100; ++i) {
    const double e = separation_error(0.5 * i);
    CHECK(e < prev);
    CHECK(e > 0.0);
    prev = e;
  }
}

TEST_CASE("relaxation error") {
  CHECK(relaxation_error(200e-9, 26e-6) * 100.0 == doctest::Approx(0.38).epsilon(0.01 / 0.38));
  CHECK(relaxation_error(200e-9, 26e-6) == doctest::Approx(0.5 * (1.0 - std::exp(-200.0 / 26000.0))).epsilon(1e-14));
  CHECK(relaxation_error(1e-6 * std::log(2.0), 1e-6) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(relaxation_error(1e-6 * std::log(4.0), 1e-6) == doctest::Approx(0.375).epsilon(1e-14));
  CHECK(relaxation_error(200e-9, kInf) == 0.0);
  for (double r : {1e-3, 1e-2, 0.1, 0.5}) {
    CHECK(std::abs(relaxation_error(r, 1.0) - r / 2.0) < r * r / 4.0);
  }
}

TEST_CASE("spec validation") {
  auto s = spec_with(25.0, 26e-6);
  CHECK_NOTHROW(validate(s));
  s.t1_readout = 0.0;
  CHECK_THROWS_AS(validate(s), ParameterError);
  s = spec_with(-1.0, 26e-6);
  CHECK_THROWS_AS(validate(s), ParameterError);
  s = spec_with(25.0, 26e-6);
  s.demod_length = 300e-9;
  CHECK_THROWS_AS(validate(s), ParameterError);
}

TEST_CASE("no decay: misassignment equals the separation error") {
  const auto s = spec_with(25.0, kInf);
  const std::size_t n = 1000000;
  const auto g = simulate_shots(s, State::kGround, n, 1);
  const auto e = simulate_shots(s, State::kExcited, n, 2);
  const double err = 1.0 - fidelity(g, e, ideal_discriminator(s));
  const double p = separation_error(25.0);
  CHECK(p == doctest::Approx(2.1e-4).epsilon(0.05));
  CHECK(std::abs(err - p) < 3.0 * binomial_sigma(p, n));
}

TEST_CASE("indistinguishable clouds give fidelity one half") {
  const auto s = spec_with(0.0, kInf);
  const std::size_t n = 200000;
  const auto g = simulate_shots(s, State::kGround, n, 3);
  const auto e = simulate_shots(s, State::kExcited, n, 4);
  // Ties go to 0, so with coincident means every shot is assigned by the sign of the noise.
  CHECK(std::abs(fidelity(g, e, ideal_discriminator(s)) - 0.5) < 4.0 * binomial_sigma(0.5, n));
}

TEST_CASE("well separated clouds give fidelity one") {
  const auto s = spec_with(400.0, kInf);
  const auto g = simulate_shots(s, State::kGround, 10000, 5);
  const auto e = simulate_shots(s, State::kExcited, 10000, 6);
  CHECK(fidelity(g, e, ideal_discriminator(s)) == 1.0);
}

TEST_CASE("misassignment converges to separation plus relaxation") {
  for (double snr : {9.0, 16.0, 25.0}) {
    const auto s = spec_with(snr, 20e-6);
    const std::size_t n = 400000;
    const auto g = simulate_shots(s, State::kGround, n, 10);
    const auto e = simulate_shots(s, State::kExcited, n, 11);
    const double measured = 1.0 - fidelity(g, e, ideal_discriminator(s));
    const double expected = 1.0 - expected_fidelity(s);
    const double sigma = 0.5 * std::sqrt(binomial_sigma(separation_error(snr), n) * binomial_sigma(separation_error(snr), n) +
                                         binomial_sigma(2.0 * expected, n) * binomial_sigma(2.0 * expected, n));
    CHECK(std::abs(measured - expected) < 3.0 * sigma);
  }
}

TEST_CASE("linear integration relaxes less than a window flip") {
  auto s = spec_with(25.0, 5e-6);
  s.relaxation = RelaxationModel::kLinearIntegration;
  const auto g = simulate_shots(s, State::kGround, 200000, 20);
  const auto e = simulate_shots(s, State::kExcited, 200000, 21);
  const double linear = fidelity(g, e, ideal_discriminator(s));
  CHECK(linear > expected_fidelity(spec_with(25.0, 5e-6)));
}

TEST_CASE("swapping state labels with a negated discriminator keeps the fidelity") {
  const auto s = spec_with(12.0, 15e-6);
  const auto g = simulate_shots(s, State::kGround, 50000, 30);
  const auto e = simulate_shots(s, State::kExcited, 50000, 31);
  const auto d = fit_discriminator(g, e);
  CHECK(fidelity(e, g, d.negated()) == fidelity(g, e, d));
}

TEST_CASE("fixed seed reproduces the shot stream at any thread count") {
  const auto s = spec_with(20.0, 10e-6);
  rng::set_thread_count(1);
  const auto a = simulate_shots(s, State::kExcited, 70001, 99);
  rng::set_thread_count(7);
  const auto b = simulate_shots(s, State::kExcited, 70001, 99);
  rng::set_thread_count(0);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].iq == b[i].iq && a[i].assigned == b[i].assigned;
  CHECK(same);
}

TEST_CASE("Q2 single-shot fidelity") {
  auto s = spec_with(snr_for_separation_error(1.7e-4), 26e-6);
  const std::size_t n = 1000000;
  const auto g = simulate_shots(s, State::kGround, n, 101);
  const auto e = simulate_shots(s, State::kExcited, n, 102);
  const double f = fidelity(g, e, ideal_discriminator(s));
  CHECK(f * 100.0 == doctest::Approx(99.6).epsilon(0.1 / 99.6));
  const auto budget = error_budget(s, f);
  CHECK(budget.relaxation_error * 100.0 == doctest::Approx(0.383).epsilon(1e-2));
  CHECK(budget.separation_error == doctest::Approx(1.7e-4).epsilon(1e-10));
}

TEST_CASE("SNR for a fidelity target") {
  const double snr = snr_for_fidelity(0.9952, 200e-9, 30e-6);
  auto s = spec_with(snr, 30e-6);
  CHECK(expected_fidelity(s) == doctest::Approx(0.9952).epsilon(1e-12));
}

TEST_CASE("histogram counts every shot") {
  const auto s = spec_with(16.0, 20e-6);
  const auto g = simulate_shots(s, State::kGround, 5000, 40);
  const auto e = simulate_shots(s, State::kExcited, 5000, 41);
  const auto h = histogram(g, e, ideal_discriminator(s), 50);
  REQUIRE(h.size() == 50);
  std::size_t ng = 0, ne = 0;
  for (const auto& b : h) ng += b.count_g, ne += b.count_e;
  CHECK(ng == 5000);
  CHECK(ne == 5000);
}

TEST_CASE("multiplexed assignment") {
  SUBCASE("single qubit reduces to the single-shot fidelity") {
    const std::vector<ReadoutPulseSpec> specs = {spec_with(16.0, 20e-6)};
    const auto m = multiplexed_assignment(specs, {{0.0}}, 400000, 7);
    CHECK(m.dim() == 2);
    CHECK(std::abs(m.qubit_fidelity(0) - expected_fidelity(specs[0])) < 3.0 * binomial_sigma(0.01, 400000));
  }
  SUBCASE("three qubits without crosstalk factorize") {
    std::vector<ReadoutPulseSpec> specs;
    for (double f : {0.9956, 0.9952, 0.9934}) specs.push_back(spec_with(snr_for_fidelity(f, 200e-9, 25e-6), 25e-6));
    const std::vector<std::vector<double>> zero(3, std::vector<double>(3, 0.0));
    const std::size_t n = 100000;
    const auto m = multiplexed_assignment(specs, zero, n, 8);
    for (std::size_t p = 0; p < m.dim(); ++p) CHECK(m.row_sum(p) == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t p = 0; p < m.dim(); ++p) {
      double expected = 1.0;
      for (std::size_t q = 0; q < 3; ++q) {
        const double e0 = separation_error(specs[q].snr);
        const double e1 = 1.0 - 2.0 * expected_fidelity(specs[q]) + 1.0 - e0;
        expected *= ((p >> q) & 1U) ? 1.0 - e1 : 1.0 - e0;
      }
      CHECK(std::abs(m.at(p, p) - expected) < 3.0 * binomial_sigma(expected, n));
    }
  }
  SUBCASE("crosstalk tuned to a 0.02 percent cross-fidelity") {
    const auto s = spec_with(snr_for_separation_error(1.7e-4), 26e-6);
    const double c = coupling_for_cross_fidelity(s, 2e-4);
    CHECK(std::abs(pair_cross_fidelity(s, c)) == doctest::Approx(2e-4).epsilon(1e-6));
    const std::vector<ReadoutPulseSpec> specs = {s, s};
    const auto m = multiplexed_assignment(specs, {{0.0, c}, {c, 0.0}}, 200000, 9);
    const auto clean = multiplexed_assignment(specs, {{0.0, 0.0}, {0.0, 0.0}}, 200000, 9);
    for (std::size_t p = 0; p < 4; ++p) {
      for (std::size_t a = 0; a < 4; ++a) {
        if (a != p) CHECK(std::abs(m.at(p, a) - clean.at(p, a)) < 1e-3);
      }
    }
  }
  SUBCASE("dimension mismatch") {
    const std::vector<ReadoutPulseSpec> specs = {spec_with(16.0, 20e-6), spec_with(16.0, 20e-6)};
    CHECK_THROWS_AS(multiplexed_assignment(specs, {{0.0}}, 100, 1), ParameterError);
    CHECK_THROWS_AS(multiplexed_assignment(specs, {{0.1, 0.0}, {0.0, 0.0}}, 100, 1), ParameterError);
  }
}

TEST_CASE("promotion to the second excited state") {
  auto s = spec_with(30.0, 10e-6);
  s.pulse_length = 50e-9;
  s.demod_length = 120e-9;
  s.total_length = 150e-9;
  const auto plain = multilevel_fidelity(s, false, 400000, 50);
  const auto promoted = multilevel_fidelity(s, true, 400000, 50);
  CHECK(promoted.fidelity > plain.fidelity);
  CHECK(plain.expected == doctest::Approx(expected_fidelity(s)).epsilon(1e-12));
  const double sep = separation_error(s.snr);
  const double pd = 2.0 * relaxation_error(120e-9, 10e-6);
  CHECK(1.0 - plain.expected == doctest::Approx(0.5 * (sep + (1.0 - pd) * sep + pd * (1.0 - sep))).epsilon(1e-9));

  s.t1_readout = kInf;
  const auto a = multilevel_fidelity(s, false, 100000, 51);
  const auto b = multilevel_fidelity(s, true, 100000, 51);
  CHECK(a.fidelity == b.fidelity);
}
