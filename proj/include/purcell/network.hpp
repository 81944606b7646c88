#pragma once

// Two-port ABCD network engine for distributed/lumped cascades with shunt side
// branches (resonator stubs, port taps).

#include <complex>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace purcell::network {

using Complex = std::complex<double>;
using Abcd = Eigen::Matrix2cd;

/// TEM line whose electrical length scales linearly with frequency.
struct TransmissionLineSegment {
  double characteristic_impedance = 50.0;  // ohms
  double electrical_length = 0.0;          // radians at reference_frequency
  double reference_frequency = 1e9;        // Hz
  // Uniform attenuation in nepers per radian of electrical length. Zero means lossless.
  double attenuation_per_radian = 0.0;
};

enum class LumpedKind {
  kSeriesInductor,
  kShuntInductor,
  kSeriesCapacitor,
  kShuntCapacitor,
  kShuntResistor,  // port or load resistance to ground
};

struct LumpedElement {
  LumpedKind kind;
  double value;  // H, F or ohm depending on kind
};

using Element = std::variant<TransmissionLineSegment, LumpedElement>;

enum class Termination { kShort, kOpen };

struct SideBranch;

/// Ordered cascade plus shunt branches. A branch with position i is connected
/// at the node just before elements[i]; position == elements.size() is the
/// node after the last element.
struct Chain {
  std::vector<Element> elements;
  std::vector<SideBranch> branches;
};

struct SideBranch {
  std::size_t position = 0;
  Chain chain;
  Termination termination = Termination::kShort;
};

struct CircuitNetwork {
  Chain chain;
  double input_port_impedance = 50.0;
  double output_port_impedance = 50.0;
};

struct SParameters {
  Complex s11;
  Complex s21;
};

struct SweepSample {
  double frequency;  // Hz
  Complex s21;
  bool valid = true;  // false when the cascade is singular at this frequency
};

// Factories for readable netlist construction.
Element series_inductor(double henries);
Element shunt_inductor(double henries);
Element series_capacitor(double farads);
Element shunt_capacitor(double farads);
Element shunt_resistor(double ohms);
Element line(double impedance, double electrical_length, double reference_frequency,
             double attenuation_per_radian = 0.0);

void validate(const Element& element);
void validate(const CircuitNetwork& net);

Abcd abcd_of_element(const Element& element, double frequency);

/// Ordered product m[0] * m[1] * ... ; throws ParameterError on empty input.
Abcd cascade(std::span<const Abcd> matrices);

/// Total ABCD of a chain including its side branches.
Abcd chain_abcd(const Chain& chain, double frequency);

/// Shunt admittance presented by a terminated branch at its tap node.
Complex branch_admittance(const SideBranch& branch, double frequency);

SParameters s_parameters(const Abcd& m, double z_in, double z_out);

std::vector<SweepSample> s21_sweep(const CircuitNetwork& net, std::span<const double> frequencies);

/// `count` equally spaced points on [lo, hi].
std::vector<double> linear_grid(double lo, double hi, std::size_t count);

}  // namespace purcell::network
