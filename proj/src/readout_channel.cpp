#include "purcell/readout_channel.hpp"

#include <cmath>
#include <limits>

#include "purcell/constants.hpp"
#include "purcell/errors.hpp"

namespace purcell::readout {

namespace {

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) throw ParameterError(std::string(what) + " must be positive and finite");
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ParameterError(std::string(what) + " must be finite");
}

}  // namespace

void validate(const ReadoutChannel& ch) {
  require_positive(ch.qubit_frequency, "qubit frequency");
  require_positive(ch.resonator_frequency, "resonator frequency");
  require_finite(ch.dispersive_shift, "dispersive shift");
  if (ch.dispersive_shift == 0.0) throw ParameterError("dispersive shift of " + ch.label + " is zero");
  if (ch.qubit_frequency >= ch.resonator_frequency) {
    throw ParameterError("qubit " + ch.label + " must sit below its readout resonator");
  }
  if (!(ch.efficiency > 0.0 && ch.efficiency <= 1.0)) throw ParameterError("readout efficiency must lie in (0, 1]");
}

double effective_linewidth(const ReadoutChannel& ch, double filter_frequency, double filter_linewidth) {
  require_positive(filter_linewidth, "filter linewidth");
  const double g = ch.resonator_filter_coupling;
  const double u = 2.0 * (ch.resonator_frequency - filter_frequency) / filter_linewidth;
  return 4.0 * g * g / filter_linewidth / (1.0 + u * u);
}

double off_detuning_for_ratio(double ratio, double k_on, double k_off) {
  require_positive(ratio, "linewidth ratio");
  require_positive(k_on, "read-on filter linewidth");
  require_positive(k_off, "read-off filter linewidth");
  return std::sqrt(ratio * k_on * k_off / 4.0);
}

double purcell_t1(const ReadoutChannel& ch, double filter_frequency, double filter_quality, double kappa_eff) {
  require_positive(filter_quality, "filter quality");
  require_positive(kappa_eff, "effective linewidth");
  const double d_qr = ch.qubit_frequency - ch.resonator_frequency;
  const double d_qf = ch.qubit_frequency - filter_frequency;
  if (d_qr == 0.0) throw DivergenceError("qubit " + ch.label + " is resonant with its readout resonator");
  if (d_qf == 0.0) throw DivergenceError("qubit " + ch.label + " is resonant with the filter");
  const double g = ch.qubit_resonator_coupling;
  const double w = ch.qubit_frequency;
  return 4.0 * d_qr * d_qr * d_qf * d_qf * filter_quality * filter_quality / (g * g * w * w * kappa_eff);
}

double coupling_for_purcell_t1(const ReadoutChannel& ch, double filter_frequency, double filter_quality,
                               double kappa_eff, double target_t1) {
  require_positive(target_t1, "target T1");
  ReadoutChannel unit = ch;
  unit.qubit_resonator_coupling = 1.0;
  return std::sqrt(purcell_t1(unit, filter_frequency, filter_quality, kappa_eff) / target_t1);
}

double photon_dephasing_rate(const ReadoutChannel& ch, double kappa, double n_noise) {
  require_positive(kappa, "resonator linewidth");
  if (!(n_noise >= 0.0) || !std::isfinite(n_noise)) throw ParameterError("noise photon number must be >= 0");
  const double chi2 = ch.dispersive_shift * ch.dispersive_shift;
  return n_noise * kappa * chi2 / (chi2 + 0.25 * kappa * kappa);
}

double filter_photon_number(const PhotonState& st, double g_rf) {
  require_finite(g_rf, "resonator-filter coupling");
  if (g_rf == 0.0) throw ParameterError("resonator-filter coupling must be nonzero");
  if (!(st.resonator_photons >= 0.0)) throw ParameterError("resonator photon number must be >= 0");
  const double r = st.probe_detuning / g_rf;
  return r * r * st.resonator_photons;
}

double filter_current(const PhotonState& st, double w) {
  require_positive(w, "filter frequency");
  require_positive(st.filter_capacitance, "filter capacitance");
  if (!(st.filter_photons >= 0.0)) throw ParameterError("filter photon number must be >= 0");
  return 2.0 * w * std::sqrt(st.filter_photons * kHbar * w * st.filter_capacitance);
}

double filter_capacitance_for_current(double n_f, double w, double current) {
  require_positive(n_f, "filter photon number");
  require_positive(w, "filter frequency");
  require_positive(current, "filter current");
  return current * current / (4.0 * w * w * n_f * kHbar * w);
}

double critical_current_from_inductance(double squid_inductance) {
  require_positive(squid_inductance, "SQUID inductance");
  return kFluxQuantum / (kTwoPi * squid_inductance);
}

CurrentMargin squid_current_margin(double squid_inductance, double operational_current) {
  if (!(operational_current >= 0.0) || !std::isfinite(operational_current)) {
    throw ParameterError("operational current must be >= 0");
  }
  CurrentMargin m;
  m.critical_current = critical_current_from_inductance(squid_inductance);
  if (operational_current == 0.0) {
    m.margin = std::numeric_limits<double>::infinity();
    m.unbounded = true;
  } else {
    m.margin = m.critical_current / operational_current;
  }
  return m;
}

}  // namespace purcell::readout
