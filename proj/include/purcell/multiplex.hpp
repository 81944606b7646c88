#pragma once

// Dual-band multiplexed readout on one tunable filter: ancilla and data
// resonator groups, three SQUID operating points, per-band linewidth tables.

#include <cstddef>
#include <string>
#include <vector>

#include "purcell/filter_geometry.hpp"
#include "purcell/readout_channel.hpp"

namespace purcell::multiplex {

struct RegimeSpec {
  std::string name;               // "ancilla-read-on", "data-read-on", "read-off", ...
  double squid_inductance = 0.0;  // H
  std::string reads_band;         // band label this regime reads out; empty for read-off
};

struct BandSpec {
  std::string label;              // "ancilla", "data"
  double center = 0.0;            // Hz
  double span = 200e6;            // Hz, first to last resonator
  std::size_t count = 4;
  double target_linewidth = 0.0;  // Hz, mean FWHM in the band's own read-on regime
};

struct MultiplexConfig {
  network::FilterGeometry filter;  // resonators are generated from `bands`
  std::vector<BandSpec> bands;
  std::vector<RegimeSpec> regimes;
  double initial_coupling = 5e-15;  // F, starting coupling capacitance
  // Move the filter line so each band's read-on regime centers the filter on it.
  bool align_filter = true;
  // Scale each band's coupling capacitors to hit its read-on target.
  bool calibrate = true;
};

void validate(const MultiplexConfig& config);

/// Design resonance frequencies of a band, evenly spaced over its span.
std::vector<double> band_frequencies(const BandSpec& band);

struct Device {
  network::FilterGeometry geometry;
  std::vector<double> design_frequencies;  // per resonator, Hz
  std::vector<double> band_scale;          // calibration factor applied per band
  std::vector<double> design_inductance;   // per resonator: SQUID inductance at which it sits on its design frequency
};

/// Builds the filter with both resonator groups: aligns the filter, places each
/// resonance on its design frequency in its band's read-on regime and, if
/// requested, calibrates the per-band coupling scale.
Device build_variant(const MultiplexConfig& config);

/// Network of the device (filter plus all resonators) at one SQUID inductance.
network::CircuitNetwork device_network(const Device& device, double squid_inductance);

struct ResonatorRow {
  std::string label;
  std::string band;
  double frequency = 0.0;           // design frequency, Hz
  std::vector<double> linewidth;    // per regime, Hz
  std::vector<bool> upper_bound;    // per regime: peak not resolved, value is a bound
};

struct BandReport {
  std::vector<std::string> regimes;
  std::vector<std::string> bands;
  std::vector<ResonatorRow> resonators;
  std::vector<std::vector<double>> band_mean;  // [band][regime], Hz
  std::vector<double> on_off_ratio;            // per band: own read-on mean / read-off mean (NaN if absent)
  bool degenerate = false;                     // all regime inductances equal
};

BandReport regime_report(const Device& device, const std::vector<RegimeSpec>& regimes);

struct ProtectionRow {
  std::string band;
  double on_off_ratio = 0.0;
  double idle_dephasing_rate = 0.0;  // rad/s at the read-off linewidth
  double read_on_dephasing_rate = 0.0;
  double idle_purcell_t1 = 0.0;      // s
};

/// Per band: ON/OFF ratio, photon-noise dephasing at the read-off and read-on
/// linewidths, and the Purcell T1 with the filter parked at its read-off point.
/// `channels[b]` is the representative qubit of band b; `regimes` must be the
/// list the report was made with and contain a read-off regime.
std::vector<ProtectionRow> protection_summary(const BandReport& report, const Device& device,
                                              const std::vector<RegimeSpec>& regimes,
                                              const std::vector<readout::ReadoutChannel>& channels,
                                              double noise_photons);

}  // namespace purcell::multiplex
