#pragma once

// Monte Carlo single-shot dispersive readout in the integrated IQ plane.
// Each quadrature carries unit-variance Gaussian noise; the ground cloud sits at
// the origin and the excited cloud at sqrt(2 SNR) on the real axis, so the
// midpoint discriminator misassigns a non-decaying shot with probability
// 1/2 erfc(sqrt(SNR)/2).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace purcell::measurement {

enum class RelaxationModel {
  // A shot that decays anywhere inside the demodulation window integrates as
  // ground: P(0|e) gains 1 - exp(-tau/T1).
  kWindowFlip,
  // The integrated mean is the time average of the piecewise signal:
  // (t/tau) mu1 + (1 - t/tau) mu0 for a decay at time t.
  kLinearIntegration,
};

struct ReadoutPulseSpec {
  std::string label;
  double pulse_length = 100e-9;   // tau_ro, s
  double demod_length = 200e-9;   // tau_demod, s
  double total_length = 250e-9;   // tau_m, s
  double photons_ground = 0.0;    // n_r0, metadata
  double photons_excited = 0.0;   // n_r1, metadata
  double t1_readout = 26e-6;      // T1 during readout, s; +inf disables decay
  double snr = 25.0;
  RelaxationModel relaxation = RelaxationModel::kWindowFlip;
};

void validate(const ReadoutPulseSpec& spec);

enum class State : std::uint8_t { kGround = 0, kExcited = 1, kHigher = 2 };

struct ShotRecord {
  std::complex<double> iq;
  State prepared = State::kGround;
  std::uint8_t assigned = 0;
  std::uint32_t qubit = 0;  // index into the simulated spec list
};

/// Linear discriminator: projection onto the line from mu0 to mu1, threshold at
/// the midpoint, ties assigned 0.
struct Discriminator {
  std::complex<double> mu0{0.0, 0.0};
  std::complex<double> mu1{1.0, 0.0};

  double project(std::complex<double> iq) const;
  std::uint8_t assign(std::complex<double> iq) const;
  Discriminator negated() const { return {mu1, mu0}; }
};

/// Ideal cloud centers for a spec.
std::complex<double> ground_mean(const ReadoutPulseSpec& spec);
std::complex<double> excited_mean(const ReadoutPulseSpec& spec);
Discriminator ideal_discriminator(const ReadoutPulseSpec& spec);

/// Discriminator from the sample means of the two prepared clouds.
Discriminator fit_discriminator(std::span<const ShotRecord> shots_g, std::span<const ShotRecord> shots_e);

/// Shots are assigned with the ideal discriminator. Deterministic in `seed`
/// regardless of thread count. `prepared` = kHigher simulates promotion to |2>
/// before readout with |2> decaying at rate `higher_decay_ratio` / T1.
std::vector<ShotRecord> simulate_shots(const ReadoutPulseSpec& spec, State prepared, std::size_t n_shots,
                                       std::uint64_t seed, double higher_decay_ratio = 2.0);

/// (P(0|g) + P(1|e)) / 2 after reassigning both lists with `disc`.
double fidelity(std::span<const ShotRecord> shots_g, std::span<const ShotRecord> shots_e, const Discriminator& disc);

/// 1/2 erfc(sqrt(snr)/2).
double separation_error(double snr);
/// Inverse of separation_error on (0, 1/2].
double snr_for_separation_error(double error);

/// 1/2 (1 - exp(-tau/T1)).
double relaxation_error(double demod_length, double t1);

/// Expected fidelity of the Gaussian model, exact for the window-flip model.
double expected_fidelity(const ReadoutPulseSpec& spec);
/// SNR for which expected_fidelity reaches `target` under the window-flip model.
double snr_for_fidelity(double target, double demod_length, double t1);

struct ErrorBudget {
  double readout_error = 0.0;     // 1 - F
  double relaxation_error = 0.0;
  double separation_error = 0.0;
  double residual = 0.0;          // readout - relaxation - separation
};

ErrorBudget error_budget(const ReadoutPulseSpec& spec, double measured_fidelity);

struct HistogramBin {
  double center;
  std::size_t count_g;
  std::size_t count_e;
};

/// Histogram of the discriminator projection, scaled so mu0 -> 0 and mu1 -> 1.
std::vector<HistogramBin> histogram(std::span<const ShotRecord> shots_g, std::span<const ShotRecord> shots_e,
                                    const Discriminator& disc, std::size_t bins);

/// Row-major 2^N x 2^N matrix. Bit j of an index is qubit j's state/outcome.
struct AssignmentMatrix {
  std::size_t qubits = 0;
  std::vector<double> entries;

  std::size_t dim() const { return std::size_t{1} << qubits; }
  double at(std::size_t prepared, std::size_t assigned) const { return entries[prepared * dim() + assigned]; }
  double row_sum(std::size_t prepared) const;
  /// Mean of P(assigned == prepared) over qubits, marginalized.
  double qubit_fidelity(std::size_t qubit) const;
  /// 1 - [P(a_i = 1 | s_j = 1) + P(a_i = 0 | s_j = 0)], averaged over all other bits.
  double cross_fidelity(std::size_t i, std::size_t j) const;
};

/// Joint readout of all 2^N basis states with `n_shots` per state. Qubit j's
/// mean is displaced along its own axis by sum_k crosstalk[j][k] s_k |mu1_j - mu0_j|.
AssignmentMatrix multiplexed_assignment(std::span<const ReadoutPulseSpec> specs,
                                        const std::vector<std::vector<double>>& crosstalk, std::size_t n_shots,
                                        std::uint64_t seed);

/// Analytic cross-fidelity of a symmetric two-qubit pair with coupling c
/// (window-flip relaxation model).
double pair_cross_fidelity(const ReadoutPulseSpec& target, double coupling);
/// Coupling c >= 0 for which |pair_cross_fidelity| equals `target`.
double coupling_for_cross_fidelity(const ReadoutPulseSpec& spec, double target);

struct MultilevelResult {
  double fidelity = 0.0;
  double expected = 0.0;
};

/// Fidelity with (or without) promotion of |1> to |2> before readout.
MultilevelResult multilevel_fidelity(const ReadoutPulseSpec& spec, bool promote, std::size_t n_shots,
                                     std::uint64_t seed, double higher_decay_ratio = 2.0);

}  // namespace purcell::measurement
