#include "purcell/network.hpp"

#include <cmath>
#include <string>

#include "purcell/constants.hpp"
#include "purcell/errors.hpp"

namespace purcell::network {

namespace {

Abcd make(Complex a, Complex b, Complex c, Complex d) {
  Abcd m;
  m << a, b, c, d;
  return m;
}

Abcd series_impedance(Complex z) { return make(1.0, z, 0.0, 1.0); }
Abcd shunt_admittance(Complex y) { return make(1.0, 0.0, y, 1.0); }

bool finite(const Abcd& m) {
  for (int i = 0; i < 4; ++i) {
    const Complex v = m(i / 2, i % 2);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw ParameterError(std::string(what) + " must be positive and finite, got " + std::to_string(v));
  }
}

}  // namespace

Element series_inductor(double henries) { return LumpedElement{LumpedKind::kSeriesInductor, henries}; }
Element shunt_inductor(double henries) { return LumpedElement{LumpedKind::kShuntInductor, henries}; }
Element series_capacitor(double farads) { return LumpedElement{LumpedKind::kSeriesCapacitor, farads}; }
Element shunt_capacitor(double farads) { return LumpedElement{LumpedKind::kShuntCapacitor, farads}; }
Element shunt_resistor(double ohms) { return LumpedElement{LumpedKind::kShuntResistor, ohms}; }

Element line(double impedance, double electrical_length, double reference_frequency,
             double attenuation_per_radian) {
  return TransmissionLineSegment{impedance, electrical_length, reference_frequency, attenuation_per_radian};
}

void validate(const Element& element) {
  if (const auto* seg = std::get_if<TransmissionLineSegment>(&element)) {
    require_positive(seg->characteristic_impedance, "line impedance");
    require_positive(seg->reference_frequency, "line reference frequency");
    if (!std::isfinite(seg->electrical_length) || seg->electrical_length < 0.0) {
      throw ParameterError("line electrical length must be finite and >= 0");
    }
    if (!std::isfinite(seg->attenuation_per_radian) || seg->attenuation_per_radian < 0.0) {
      throw ParameterError("line attenuation must be finite and >= 0");
    }
    return;
  }
  require_positive(std::get<LumpedElement>(element).value, "lumped element value");
}

namespace {

void validate_chain(const Chain& chain) {
  for (const auto& e : chain.elements) validate(e);
  for (const auto& b : chain.branches) {
    if (b.position > chain.elements.size()) {
      throw ParameterError("side branch position " + std::to_string(b.position) + " beyond chain of " +
                           std::to_string(chain.elements.size()) + " elements");
    }
    validate_chain(b.chain);
  }
}

}  // namespace

void validate(const CircuitNetwork& net) {
  if (net.chain.elements.empty()) throw ParameterError("network needs at least one element");
  require_positive(net.input_port_impedance, "input port impedance");
  require_positive(net.output_port_impedance, "output port impedance");
  validate_chain(net.chain);
}

Abcd abcd_of_element(const Element& element, double frequency) {
  if (!std::isfinite(frequency) || frequency <= 0.0) {
    throw ParameterError("frequency must be positive, got " + std::to_string(frequency));
  }
  validate(element);
  const double w = angular(frequency);
  const Complex j(0.0, 1.0);

  if (const auto* seg = std::get_if<TransmissionLineSegment>(&element)) {
    const double theta = seg->electrical_length * frequency / seg->reference_frequency;
    const Complex gl = Complex(seg->attenuation_per_radian, 1.0) * theta;
    const double z = seg->characteristic_impedance;
    if (seg->attenuation_per_radian == 0.0) {
      // Exact real/imaginary split keeps det == 1 to rounding.
      const double c = std::cos(theta), s = std::sin(theta);
      return make(c, j * z * s, j * s / z, c);
    }
    return make(std::cosh(gl), z * std::sinh(gl), std::sinh(gl) / z, std::cosh(gl));
  }

  const auto& lumped = std::get<LumpedElement>(element);
  switch (lumped.kind) {
    case LumpedKind::kSeriesInductor:
      return series_impedance(j * w * lumped.value);
    case LumpedKind::kShuntInductor:
      return shunt_admittance(1.0 / (j * w * lumped.value));
    case LumpedKind::kSeriesCapacitor:
      return series_impedance(1.0 / (j * w * lumped.value));
    case LumpedKind::kShuntCapacitor:
      return shunt_admittance(j * w * lumped.value);
    case LumpedKind::kShuntResistor:
      return shunt_admittance(1.0 / lumped.value);
  }
  throw ParameterError("unknown lumped element kind");
}

Abcd cascade(std::span<const Abcd> matrices) {
  if (matrices.empty()) throw ParameterError("cascade of an empty list");
  Abcd total = matrices.front();
  for (std::size_t i = 1; i < matrices.size(); ++i) total = total * matrices[i];
  return total;
}

Complex branch_admittance(const SideBranch& branch, double frequency) {
  const Abcd m = chain_abcd(branch.chain, frequency);
  // Input admittance of the chain loaded by a short (V2 = 0) or an open (I2 = 0).
  if (branch.termination == Termination::kShort) return m(1, 1) / m(0, 1);
  return m(1, 0) / m(0, 0);
}

Abcd chain_abcd(const Chain& chain, double frequency) {
  Abcd total = Abcd::Identity();
  const std::size_t n = chain.elements.size();
  for (std::size_t i = 0; i <= n; ++i) {
    Complex y = 0.0;
    bool any = false;
    for (const auto& b : chain.branches) {
      if (b.position != i) continue;
      y += branch_admittance(b, frequency);
      any = true;
    }
    if (any) total = total * shunt_admittance(y);
    if (i < n) total = total * abcd_of_element(chain.elements[i], frequency);
  }
  return total;
}

SParameters s_parameters(const Abcd& m, double z_in, double z_out) {
  const Complex a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const Complex den = a * z_out + b + c * z_in * z_out + d * z_in;
  return {(a * z_out + b - c * z_in * z_out - d * z_in) / den, 2.0 * std::sqrt(z_in * z_out) / den};
}

std::vector<SweepSample> s21_sweep(const CircuitNetwork& net, std::span<const double> frequencies) {
  validate(net);
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] > 0.0) || !std::isfinite(frequencies[i])) {
      throw ParameterError("sweep frequencies must be positive and finite");
    }
    if (i > 0 && !(frequencies[i] > frequencies[i - 1])) {
      throw ParameterError("sweep frequencies must be strictly increasing");
    }
  }

  std::vector<SweepSample> out;
  out.reserve(frequencies.size());
  for (double f : frequencies) {
    const Abcd m = chain_abcd(net.chain, f);
    SweepSample sample{f, 0.0, false};
    if (finite(m)) {
      const auto s = s_parameters(m, net.input_port_impedance, net.output_port_impedance);
      if (std::isfinite(s.s21.real()) && std::isfinite(s.s21.imag())) {
        sample.s21 = s.s21;
        sample.valid = true;
      }
    }
    out.push_back(sample);
  }
  return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) throw ParameterError("linear_grid needs count >= 2 and hi > lo");
  std::vector<double> grid(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid.back() = hi;
  return grid;
}

}  // namespace purcell::network
