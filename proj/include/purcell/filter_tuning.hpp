#pragma once

// Closed-form flux tuning of the SQUID-terminated half-wave filter.

#include <span>
#include <vector>

#include "purcell/filter_geometry.hpp"

namespace purcell::filter {

struct FilterParams {
  double critical_current = 0.66e-6;         // A
  double bare_frequency = 0.0;               // omega_f0, rad/s
  double bare_inductance = 0.0;              // L_f0, H
  double per_unit_length_inductance = 0.0;   // L_u, H/m
  double physical_length = 0.0;              // l_p, m
  double filter_impedance = 0.0;             // Z_f, ohm
  double port_resistance = 50.0;             // R_0, ohm
  double input_quality = 700.0;              // Q_fin

  double base_quality() const { return port_resistance / filter_impedance; }  // Q_f0
  double total_inductance() const { return per_unit_length_inductance * physical_length; }
};

void validate(const FilterParams& params);

/// External flux in webers for a bias given in units of the flux quantum.
double flux_from_quanta(double phi_over_phi0);

/// L_S = Phi0 / (4 pi I_c |cos(pi phi / Phi0)|). Throws DivergenceError within
/// 1e-6 Phi0 of a half-integer flux bias.
double squid_inductance(const FilterParams& params, double flux);

/// omega_f0 / (1 + L_S / L_f0), rad/s.
double filter_frequency(const FilterParams& params, double squid_inductance);

/// Q_f0 / sin^2(pi L_S / (L_u l_p)).
double output_quality(const FilterParams& params, double squid_inductance);

/// Harmonic combination 1/Q = 1/Q_out + 1/Q_in.
double total_quality(double output_quality, double input_quality);

struct TuningPoint {
  double flux = 0.0;       // Wb
  double frequency = 0.0;  // omega_f, rad/s
  double linewidth = 0.0;  // kappa_f, rad/s
  double quality = 0.0;    // Q_f
  bool valid = false;      // false at singular biases; other fields are then zero
};

std::vector<TuningPoint> tuning_curve(const FilterParams& params, std::span<const double> fluxes);

/// Filter center and FWHM in the two operating regimes, Hz.
struct RegimeTargets {
  double read_on_frequency;
  double read_on_linewidth;
  double read_off_frequency;
  double read_off_linewidth;
};

struct CalibratedParams {
  FilterParams params;
  double read_on_flux = 0.0;   // Wb
  double read_off_flux = 0.0;  // Wb (zero: read-off sits at the tuning maximum)
};

/// Solves omega_f0, Q_f0 and I_c so the read-off regime (zero flux) and read-on
/// regime hit `targets`. The total filter inductance L_f0 = L_u l_p, the input
/// quality and the port resistance are held fixed.
CalibratedParams calibrate_params(const RegimeTargets& targets, double total_inductance, double physical_length,
                                  double input_quality, double port_resistance = 50.0);

/// Closed-form parameters fitted to the simulated filter peak of `geometry` at
/// the given SQUID inductances: 1/omega is fitted linearly in L_S, then 1/Q
/// linearly in sin^2(pi L_S / L_f0) to obtain Q_f0 and Q_fin.
FilterParams match_network(const network::FilterGeometry& geometry, std::span<const double> squid_inductances,
                           double physical_length, double critical_current);

}  // namespace purcell::filter
