#pragma once

// Distributed-element model of a shorted lambda/2 Purcell filter with a SQUID
// (modeled as a linear inductor) and capacitively coupled lambda/4 readout
// resonators. Builds the CircuitNetwork for the filter transmission and for the
// weak-probe transmission through each readout resonator.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "purcell/network.hpp"
#include "purcell/resonance.hpp"

namespace purcell::network {

enum class FilterVariant {
  kVariableBandwidth,  // SQUID between the output port tap and ground
  kFixedBandwidth,     // SQUID at the far shorted end; output tap at a fixed position
};

struct ResonatorStub {
  std::string label;
  std::string band;                   // free-form group label ("ancilla", "data", ...)
  double stub_frequency = 6e9;        // Hz at which the bare shorted stub is a quarter wave
  double coupling_capacitance = 5e-15;  // F, resonator open end to filter tap
  double impedance = 50.0;            // ohm
};

struct FilterGeometry {
  FilterVariant variant = FilterVariant::kVariableBandwidth;
  double line_frequency = 7.4e9;  // Hz where the bare line is a half wave
  double line_impedance = 50.0;   // ohm
  double port_impedance = 50.0;   // R0 of input, output and probe ports
  double input_coupling = 10e-15;  // F, series capacitor to the weak input port
  // Resonator and input coupling node, as a fraction of the line measured from
  // the SQUID end.
  double tap_fraction = 0.5;
  // Fixed variant only: output tap distance from the far short, as a fraction.
  double port_tap_fraction = 0.15;
  double probe_coupling = 1e-15;  // F, weak probe into a resonator open end
  std::vector<ResonatorStub> resonators;
};

void validate(const FilterGeometry& geometry);

/// Input port -> filter -> output port, optionally with the resonators loading the tap.
CircuitNetwork filter_network(const FilterGeometry& geometry, double squid_inductance, bool with_resonators);

/// Weak probe into resonator `index` -> filter -> output port. The filter input
/// port becomes a terminated side branch.
CircuitNetwork resonator_probe_network(const FilterGeometry& geometry, double squid_inductance, std::size_t index);

/// Filter passband peak (frequency and FWHM) at the given SQUID inductance.
ResonancePeak measure_filter(const FilterGeometry& geometry, double squid_inductance,
                             FrequencyWindow search = {3e9, 10e9});

/// Loaded resonance of resonator `index` seen through the probe network. The
/// default search spans 0.8 to 1.01 times the bare stub frequency.
ResonancePeak measure_resonator(const FilterGeometry& geometry, double squid_inductance, std::size_t index,
                               std::optional<FrequencyWindow> search = std::nullopt);

struct FilterTargets {
  double read_on_frequency;   // Hz
  double read_on_linewidth;   // Hz
  double read_off_frequency;  // Hz
  double read_off_linewidth;  // Hz
};

struct CalibratedFilter {
  FilterGeometry geometry;
  double read_on_inductance = 0.0;   // H
  double read_off_inductance = 0.0;  // H
  std::size_t iterations = 0;
};

/// Newton solve on (line frequency, line impedance, two SQUID inductances) so the
/// simulated filter peak hits both regimes' center and linewidth.
CalibratedFilter calibrate_filter(const FilterGeometry& seed, double read_on_inductance_guess,
                                  double read_off_inductance_guess, const FilterTargets& targets);

/// Adjusts the stub length and coupling capacitor of resonator `index` so that at
/// `squid_inductance` it resonates at `frequency` with FWHM `linewidth`.
void calibrate_resonator(FilterGeometry& geometry, std::size_t index, double squid_inductance, double frequency,
                         double linewidth);

/// Retunes stub lengths only, so each loaded resonance lands on `frequencies[i]`.
/// Each search is limited to +-`half_window` around the target.
void tune_resonator_frequencies(FilterGeometry& geometry, double squid_inductance,
                                const std::vector<double>& frequencies, double half_window = 30e6);

/// Newton on (line frequency, line impedance) so the bare filter peak sits at
/// `frequencies[k]` when the SQUID inductance is `inductances[k]` (k = 0, 1).
void align_filter(FilterGeometry& geometry, const std::array<double, 2>& inductances,
                  const std::array<double, 2>& frequencies);

}  // namespace purcell::network
