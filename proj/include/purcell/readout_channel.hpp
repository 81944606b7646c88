#pragma once

// Closed-form dispersive readout channel: filtered resonator linewidth, Purcell
// decay through the filter, photon-shot-noise dephasing, filter photon number
// and the SQUID current budget.

#include <string>

namespace purcell::readout {

/// All frequencies and couplings are angular (rad/s).
struct ReadoutChannel {
  std::string label;
  double qubit_frequency = 0.0;            // omega_q
  double resonator_frequency = 0.0;        // omega_r
  double dispersive_shift = 0.0;           // chi, half of the state-conditioned peak splitting 2chi
  double qubit_resonator_coupling = 0.0;   // g_qr
  double resonator_filter_coupling = 0.0;  // g_rf
  double intrinsic_t1 = 0.0;               // s
  double efficiency = 1.0;                 // eta
};

void validate(const ReadoutChannel& channel);

struct PhotonState {
  double resonator_photons = 0.0;   // n_r
  double filter_photons = 0.0;      // n_f
  double probe_detuning = 0.0;      // Delta_rd, rad/s
  double filter_capacitance = 0.0;  // C_f, F
};

/// kappa_r = (4 g_rf^2 / kappa_f) / (1 + [2 (omega_r - omega_f) / kappa_f]^2).
double effective_linewidth(const ReadoutChannel& channel, double filter_frequency, double filter_linewidth);

/// Filter-resonator detuning at which the read-on/read-off linewidth ratio
/// reaches `ratio`, using the large-detuning form 4 Delta^2 / (kappa_on kappa_off).
double off_detuning_for_ratio(double ratio, double read_on_filter_linewidth, double read_off_filter_linewidth);

/// T1 = 4 Delta_qr^2 Delta_qf^2 Q_f^2 / (g_qr^2 omega_q^2 kappa_eff).
double purcell_t1(const ReadoutChannel& channel, double filter_frequency, double filter_quality, double kappa_eff);

/// g_qr that makes purcell_t1 equal `target_t1` with everything else fixed.
double coupling_for_purcell_t1(const ReadoutChannel& channel, double filter_frequency, double filter_quality,
                               double kappa_eff, double target_t1);

/// Gamma_phi = n kappa chi^2 / (chi^2 + kappa^2 / 4).
double photon_dephasing_rate(const ReadoutChannel& channel, double resonator_linewidth, double noise_photons);

/// n_f = (Delta_rd / g_rf)^2 n_r.
double filter_photon_number(const PhotonState& state, double resonator_filter_coupling);

/// I = 2 omega_f sqrt(n_f hbar omega_f C_f).
double filter_current(const PhotonState& state, double filter_frequency);

/// C_f for which filter_current returns `current`.
double filter_capacitance_for_current(double filter_photons, double filter_frequency, double current);

/// I_c = Phi0 / (2 pi L_S).
double critical_current_from_inductance(double squid_inductance);

struct CurrentMargin {
  double critical_current = 0.0;  // A
  double margin = 0.0;            // I_c / I_op; +inf when I_op = 0
  bool unbounded = false;
  bool safe() const { return margin > 1.0; }
};

CurrentMargin squid_current_margin(double squid_inductance, double operational_current);

}  // namespace purcell::readout
