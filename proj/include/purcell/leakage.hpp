#pragma once

// Three-state {|0>, |1>, leaked} Markov model of repeated measurement, the
// pi-QND and random-bit-flip benchmarking sequences, and their decay fits.
//
// One cycle is: read out the current state, apply the measurement-induced
// transition (leak out of either computational state with L_up, seep from the
// leaked state back to |1> with L_down), then apply the interleaved gate.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace purcell::leakage {

struct Distribution {
  double p0 = 1.0;
  double p1 = 0.0;
  double leak = 0.0;

  double computational() const { return p0 + p1; }
};

struct LeakageChain {
  double leak_rate = 0.0;        // L_up per measurement
  double seep_rate = 0.0;        // L_down per measurement
  double error_0 = 0.0;          // P(read 1 | 0)
  double error_1 = 0.0;          // P(read 0 | 1)
  double leak_reads_one = 1.0;   // P(read 1 | leaked); 0.5 is the half-half convention
  Distribution initial{};
};

void validate(const LeakageChain& chain);

enum class Interleave { kXGate, kRandomBitFlip, kNone };
enum class InitialGate { kXHalf, kX, kIdentity };

struct SequenceSchedule {
  std::size_t cycles = 400;  // m_max measurements per sequence
  Interleave interleave = Interleave::kXGate;
  InitialGate initial_gate = InitialGate::kXHalf;
};

void validate(const SequenceSchedule& schedule);

/// Population after `m` transitions starting from chain.initial (no gates; the
/// computational population does not depend on them).
Distribution propagate_exact(const LeakageChain& chain, std::size_t m);

/// Closed form A (1 - L)^m + B of the computational population.
double computational_population(const LeakageChain& chain, std::size_t m);

/// Per-cycle statistics of one sequence family. Entry k describes the pair of
/// measurements (k, k+1), i.e. cycle index m = k + 1.
struct PiQndSeries {
  std::vector<double> flip;    // P(o_m != o_{m-1}), the fitted series
  std::vector<double> p0_given_1;  // P(o_m = 0 | o_{m-1} = 1)
  std::vector<double> p1_given_0;  // P(o_m = 1 | o_{m-1} = 0)
  std::vector<std::uint64_t> pairs;     // number of pairs per m (0 for exact series)
  std::vector<std::uint64_t> ones;      // pairs with o_{m-1} = 1
  std::vector<std::uint64_t> zeros;     // pairs with o_{m-1} = 0
  bool low_statistics = false;          // fewer than 100 shots
};

struct CorrelationSeries {
  std::vector<double> mean;             // <C_m>
  std::vector<std::uint64_t> samples;   // 0 for exact series
};

/// Exact pi-QND statistics by joint propagation of (state, previous outcome).
PiQndSeries exact_pi_qnd(const LeakageChain& chain, const SequenceSchedule& schedule);
/// Exact <C_m> with the random flips averaged analytically.
CorrelationSeries exact_random_circuit(const LeakageChain& chain, const SequenceSchedule& schedule);

PiQndSeries simulate_pi_qnd(const LeakageChain& chain, const SequenceSchedule& schedule, std::size_t n_shots,
                            std::uint64_t seed);

/// `n_random` fixed flip sequences, each repeated for `n_shots` shots. C_m = 1
/// when o_m XOR o_{m-1} equals the flip applied between the two readouts.
CorrelationSeries simulate_random_circuit(const LeakageChain& chain, const SequenceSchedule& schedule,
                                          std::size_t n_random, std::size_t n_shots, std::uint64_t seed);

struct DecayFit {
  double amplitude = 0.0;  // A (the random-circuit A for fit_random_circuit)
  double offset = 0.0;     // B, the asymptote of the fitted series
  double rate_sum = 0.0;   // L = L_up + L_down
  double leak = 0.0;       // L_up
  double seep = 0.0;       // L_down
  // Covariance of (A, B, L) for pi-QND fits and of (A, L_up, L_down) for
  // random-circuit fits.
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double leak_sigma = 0.0;
  double seep_sigma = 0.0;
  double residual_rms = 0.0;
  std::size_t iterations = 0;
  bool zero_rate = false;
};

/// Three-parameter fit of y_m = A (1 - L)^m + B, m = 1, 2, ... Weights are
/// inverse binomial variances when `counts` is non-empty.
DecayFit fit_exponential(const std::vector<double>& series, const std::vector<std::uint64_t>& counts);

/// Fit of the pi-QND flip series; L_up = L (1 - B), L_down = L B.
DecayFit fit_pi_qnd(const PiQndSeries& series);

/// <C_m> = [L_up (A - 1/2)(1 - L)^m + A L_down + L_up / 2] / L.
double correlation_model(double amplitude, double leak, double seep, double m);
DecayFit fit_random_circuit(const CorrelationSeries& series);

struct PlantedResult {
  DecayFit pooled;                // fit of the data pooled over all repeats
  std::vector<DecayFit> repeats;  // one fit per repeat
  double leak_sigma = 0.0;        // spread of the per-repeat L_up estimates
  double seep_sigma = 0.0;
  std::vector<double> pooled_series;          // flip probability or <C_m>, per m
  std::vector<std::uint64_t> pooled_counts;   // pairs or samples behind each entry
};

/// `repeats` independent pi-QND experiments of `shots` sequences each.
PlantedResult planted_pi_qnd(const LeakageChain& chain, const SequenceSchedule& schedule, std::size_t shots,
                             std::size_t repeats, std::uint64_t seed);

/// `repeats` random-circuit experiments of `n_random` x `shots` sequences each.
PlantedResult planted_random_circuit(const LeakageChain& chain, const SequenceSchedule& schedule,
                                     std::size_t n_random, std::size_t shots, std::size_t repeats,
                                     std::uint64_t seed);

}  // namespace purcell::leakage
