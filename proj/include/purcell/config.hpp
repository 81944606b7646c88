#pragma once

// Run configuration: one JSON document with optional device, sweep, readout,
// leakage and multiplex sections. Frequencies are given in GHz, linewidths and
// couplings in MHz, inductances in nH, capacitances in fF, times in ns (T1 in
// us) and converted to SI on load. Every section is validated completely here.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "purcell/filter_geometry.hpp"
#include "purcell/filter_tuning.hpp"
#include "purcell/leakage.hpp"
#include "purcell/measurement.hpp"
#include "purcell/multiplex.hpp"
#include "purcell/readout_channel.hpp"

namespace purcell::config {

struct NetlistCalibration {
  network::FilterTargets targets;
  double read_on_inductance_guess = 0.5e-9;
  double read_off_inductance_guess = 0.2e-9;
};

struct FilterCalibration {
  filter::RegimeTargets targets;
  double total_inductance = 0.0;  // H
  double physical_length = 0.0;   // m
  double input_quality = 700.0;
  double port_resistance = 50.0;
};

// The closed-form filter is given either explicitly or as calibration targets.
struct DeviceConfig {
  std::optional<filter::FilterParams> filter;
  std::optional<FilterCalibration> filter_calibration;
  std::optional<network::FilterGeometry> netlist;
  std::optional<NetlistCalibration> netlist_calibration;
  std::vector<readout::ReadoutChannel> qubits;
};

struct SweepConfig {
  std::vector<double> flux_biases;  // Phi / Phi0
  double start = 3e9;               // Hz
  double stop = 10e9;
  std::size_t points = 2001;
  bool with_resonators = false;
  std::optional<double> critical_current;  // A, SQUID of the netlist
};

struct ReadoutConfig {
  std::uint64_t seed = 0;
  std::size_t shots = 100000;
  std::size_t histogram_bins = 100;
  std::size_t matrix_shots = 20000;
  std::vector<measurement::ReadoutPulseSpec> pulses;
  std::vector<std::vector<double>> crosstalk;  // empty: no crosstalk
};

struct LeakageRun {
  std::string label;
  leakage::LeakageChain chain;
};

struct LeakageConfig {
  std::uint64_t seed = 0;
  std::size_t cycles = 400;
  std::size_t pi_qnd_shots = 4000;
  std::size_t random_sequences = 200;
  std::size_t random_shots = 20;
  std::size_t repeats = 10;
  bool run_pi_qnd = true;
  bool run_random_circuit = true;
  std::vector<LeakageRun> runs;
};

struct MultiplexVariant {
  std::string name;
  multiplex::MultiplexConfig config;
};

struct MultiplexSection {
  std::vector<MultiplexVariant> variants;
  double noise_photons = 5e-4;
  std::vector<std::string> channels;  // qubit label per band, in band order
};

struct RunConfig {
  std::optional<DeviceConfig> device;
  std::optional<SweepConfig> sweep;
  std::optional<ReadoutConfig> readout;
  std::optional<LeakageConfig> leakage;
  std::optional<MultiplexSection> multiplex;
};

/// Parses and validates; throws ConfigError naming the offending key.
RunConfig parse(const std::string& text);
RunConfig load(const std::filesystem::path& path);

/// Replaces every seed in the configuration.
void override_seeds(RunConfig& config, std::uint64_t seed);

const readout::ReadoutChannel& find_qubit(const DeviceConfig& device, const std::string& label);

}  // namespace purcell::config
