#include "purcell/filter_geometry.hpp"

#include <algorithm>
#include <cmath>

#include "purcell/constants.hpp"
#include "purcell/errors.hpp"

namespace purcell::network {

namespace {

// Electrical length of a fraction of the half-wave filter line.
Element filter_section(const FilterGeometry& g, double fraction) {
  return line(g.line_impedance, kPi * fraction, g.line_frequency);
}

Element quarter_wave(const ResonatorStub& r) { return line(r.impedance, 0.5 * kPi, r.stub_frequency); }

// Resonator as seen from the filter tap: coupling capacitor then shorted stub.
SideBranch resonator_branch(const ResonatorStub& r, std::size_t at) {
  SideBranch b;
  b.position = at;
  b.chain.elements = {series_capacitor(r.coupling_capacitance), quarter_wave(r)};
  b.termination = Termination::kShort;
  return b;
}

SideBranch shorted_section(const FilterGeometry& g, double fraction, std::size_t at) {
  SideBranch b;
  b.position = at;
  b.chain.elements = {filter_section(g, fraction)};
  b.termination = Termination::kShort;
  return b;
}

// Line section ending in the SQUID to ground (fixed variant, seen from the tap).
SideBranch squid_section(const FilterGeometry& g, double fraction, double squid_inductance, std::size_t at) {
  SideBranch b;
  b.position = at;
  b.chain.elements = {filter_section(g, fraction), shunt_inductor(squid_inductance)};
  b.termination = Termination::kOpen;
  return b;
}

// Weak input port hanging off the tap when the probe drives a resonator.
SideBranch input_port_branch(const FilterGeometry& g, std::size_t at) {
  SideBranch b;
  b.position = at;
  b.chain.elements = {series_capacitor(g.input_coupling), shunt_resistor(g.port_impedance)};
  b.termination = Termination::kOpen;
  return b;
}

// Appends the filter body from the tap node (index `tap`) to the output port.
// Branches for the side of the line away from the port are attached at `tap`.
void append_filter_body(Chain& chain, const FilterGeometry& g, double squid_inductance, std::size_t tap) {
  const double t = g.tap_fraction;
  if (g.variant == FilterVariant::kVariableBandwidth) {
    chain.branches.push_back(shorted_section(g, 1.0 - t, tap));
    chain.elements.push_back(filter_section(g, t));
    chain.elements.push_back(shunt_inductor(squid_inductance));
  } else {
    const double p = g.port_tap_fraction;
    chain.branches.push_back(squid_section(g, t, squid_inductance, tap));
    chain.elements.push_back(filter_section(g, 1.0 - p - t));
    chain.branches.push_back(shorted_section(g, p, chain.elements.size()));
  }
}

}  // namespace

void validate(const FilterGeometry& g) {
  auto positive = [](double v, const char* what) {
    if (!std::isfinite(v) || v <= 0.0) throw ParameterError(std::string(what) + " must be positive");
  };
  positive(g.line_frequency, "filter line frequency");
  positive(g.line_impedance, "filter line impedance");
  positive(g.port_impedance, "port impedance");
  positive(g.input_coupling, "input coupling capacitance");
  positive(g.probe_coupling, "probe coupling capacitance");
  if (!(g.tap_fraction > 0.0 && g.tap_fraction < 1.0)) throw ParameterError("tap fraction must lie in (0, 1)");
  if (g.variant == FilterVariant::kFixedBandwidth &&
      !(g.port_tap_fraction > 0.0 && g.port_tap_fraction + g.tap_fraction < 1.0)) {
    throw ParameterError("fixed variant needs 0 < port tap fraction < 1 - tap fraction");
  }
  for (const auto& r : g.resonators) {
    positive(r.stub_frequency, "resonator stub frequency");
    positive(r.coupling_capacitance, "resonator coupling capacitance");
    positive(r.impedance, "resonator impedance");
  }
}

CircuitNetwork filter_network(const FilterGeometry& g, double squid_inductance, bool with_resonators) {
  validate(g);
  CircuitNetwork net;
  net.input_port_impedance = g.port_impedance;
  net.output_port_impedance = g.port_impedance;
  net.chain.elements.push_back(series_capacitor(g.input_coupling));
  const std::size_t tap = 1;
  if (with_resonators) {
    for (const auto& r : g.resonators) net.chain.branches.push_back(resonator_branch(r, tap));
  }
  append_filter_body(net.chain, g, squid_inductance, tap);
  return net;
}

CircuitNetwork resonator_probe_network(const FilterGeometry& g, double squid_inductance, std::size_t index) {
  validate(g);
  if (index >= g.resonators.size()) throw ParameterError("resonator index out of range");
  const auto& target = g.resonators[index];

  CircuitNetwork net;
  net.input_port_impedance = g.port_impedance;
  net.output_port_impedance = g.port_impedance;
  auto& chain = net.chain;
  chain.elements.push_back(series_capacitor(g.probe_coupling));
  // Node 1: resonator open end, stub to ground.
  SideBranch stub;
  stub.position = 1;
  stub.chain.elements = {quarter_wave(target)};
  chain.branches.push_back(stub);
  chain.elements.push_back(series_capacitor(target.coupling_capacitance));
  // Node 2: filter tap.
  const std::size_t tap = 2;
  chain.branches.push_back(input_port_branch(g, tap));
  for (std::size_t k = 0; k < g.resonators.size(); ++k) {
    if (k != index) chain.branches.push_back(resonator_branch(g.resonators[k], tap));
  }
  append_filter_body(chain, g, squid_inductance, tap);
  return net;
}

ResonancePeak measure_filter(const FilterGeometry& g, double squid_inductance, FrequencyWindow search) {
  return locate_resonance(filter_network(g, squid_inductance, false), search);
}

ResonancePeak measure_resonator(const FilterGeometry& g, double squid_inductance, std::size_t index,
                               std::optional<FrequencyWindow> search) {
  const double f = g.resonators.at(index).stub_frequency;
  LocateOptions options;
  if (!search) {
    options.coarse_points = 20001;
    search = FrequencyWindow{0.8 * f, 1.01 * f};
  }
  return locate_resonance(resonator_probe_network(g, squid_inductance, index), *search, options);
}

CalibratedFilter calibrate_filter(const FilterGeometry& seed, double on_guess, double off_guess,
                                  const FilterTargets& targets) {
  // Unknowns in log space: line frequency, line impedance, L_on, L_off.
  Eigen::Vector4d x(std::log(seed.line_frequency), std::log(seed.line_impedance), std::log(on_guess),
                    std::log(off_guess));
  const Eigen::Vector4d want(std::log(targets.read_on_frequency), std::log(targets.read_on_linewidth),
                             std::log(targets.read_off_frequency), std::log(targets.read_off_linewidth));

  auto evaluate = [&](const Eigen::Vector4d& v) {
    FilterGeometry g = seed;
    g.line_frequency = std::exp(v[0]);
    g.line_impedance = std::exp(v[1]);
    const auto on = measure_filter(g, std::exp(v[2]));
    const auto off = measure_filter(g, std::exp(v[3]));
    return Eigen::Vector4d(std::log(on.center_frequency), std::log(on.linewidth_fwhm),
                           std::log(off.center_frequency), std::log(off.linewidth_fwhm));
  };

  CalibratedFilter out;
  Eigen::Vector4d y = evaluate(x);
  for (out.iterations = 1; out.iterations <= 30; ++out.iterations) {
    const Eigen::Vector4d err = y - want;
    if (err.cwiseAbs().maxCoeff() < 1e-5) break;
    Eigen::Matrix4d jac;
    for (int k = 0; k < 4; ++k) {
      Eigen::Vector4d h = x;
      h[k] += 1e-4;
      jac.col(k) = (evaluate(h) - y) / 1e-4;
    }
    Eigen::Vector4d step = jac.fullPivLu().solve(-err);
    // Damped update: never move more than ~30% in any unknown per iteration.
    const double scale = std::min(1.0, 0.3 / std::max(step.cwiseAbs().maxCoeff(), 1e-300));
    x += scale * step;
    y = evaluate(x);
  }
  if ((y - want).cwiseAbs().maxCoeff() > 1e-3) {
    throw FitError("filter geometry calibration did not reach its targets", out.iterations);
  }
  out.geometry = seed;
  out.geometry.line_frequency = std::exp(x[0]);
  out.geometry.line_impedance = std::exp(x[1]);
  out.read_on_inductance = std::exp(x[2]);
  out.read_off_inductance = std::exp(x[3]);
  return out;
}

void calibrate_resonator(FilterGeometry& g, std::size_t index, double squid_inductance, double frequency,
                         double linewidth) {
  auto& r = g.resonators.at(index);
  std::size_t it = 0;
  for (; it < 40; ++it) {
    const auto peak = measure_resonator(g, squid_inductance, index);
    const double df = peak.center_frequency / frequency - 1.0;
    const double dk = peak.linewidth_fwhm / linewidth - 1.0;
    if (std::abs(df) < 1e-7 && std::abs(dk) < 1e-4) return;
    r.stub_frequency *= frequency / peak.center_frequency;
    // Linewidth scales roughly as the square of the coupling capacitance.
    r.coupling_capacitance *= std::pow(linewidth / peak.linewidth_fwhm, 0.5);
  }
  throw FitError("resonator " + r.label + " calibration did not converge", it);
}

void tune_resonator_frequencies(FilterGeometry& g, double squid_inductance, const std::vector<double>& frequencies,
                                double half_window) {
  if (frequencies.size() != g.resonators.size()) throw ParameterError("one target frequency per resonator");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const FrequencyWindow window{frequencies[i] - half_window, frequencies[i] + half_window};
    for (int it = 0; it < 40; ++it) {
      const auto peak = measure_resonator(g, squid_inductance, i, window);
      if (std::abs(peak.center_frequency / frequencies[i] - 1.0) < 1e-7) break;
      g.resonators[i].stub_frequency *= frequencies[i] / peak.center_frequency;
    }
  }
}

void align_filter(FilterGeometry& g, const std::array<double, 2>& inductances,
                  const std::array<double, 2>& frequencies) {
  Eigen::Vector2d x(std::log(g.line_frequency), std::log(g.line_impedance));
  const Eigen::Vector2d want(std::log(frequencies[0]), std::log(frequencies[1]));
  auto evaluate = [&](const Eigen::Vector2d& v) {
    FilterGeometry t = g;
    t.line_frequency = std::exp(v[0]);
    t.line_impedance = std::exp(v[1]);
    return Eigen::Vector2d(std::log(measure_filter(t, inductances[0]).center_frequency),
                           std::log(measure_filter(t, inductances[1]).center_frequency));
  };
  Eigen::Vector2d y = evaluate(x);
  std::size_t it = 0;
  for (; it < 30 && (y - want).cwiseAbs().maxCoeff() > 1e-7; ++it) {
    Eigen::Matrix2d jac;
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d h = x;
      h[k] += 1e-5;
      jac.col(k) = (evaluate(h) - y) / 1e-5;
    }
    Eigen::Vector2d step = jac.fullPivLu().solve(want - y);
    x += std::min(1.0, 0.3 / std::max(step.cwiseAbs().maxCoeff(), 1e-300)) * step;
    y = evaluate(x);
  }
  if ((y - want).cwiseAbs().maxCoeff() > 1e-5) throw FitError("filter alignment did not converge", it);
  g.line_frequency = std::exp(x[0]);
  g.line_impedance = std::exp(x[1]);
}

}  // namespace purcell::network
