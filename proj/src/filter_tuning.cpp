#include "purcell/filter_tuning.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "purcell/constants.hpp"
#include "purcell/errors.hpp"

namespace purcell::filter {

namespace {

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) throw ParameterError(std::string(what) + " must be positive and finite");
}

constexpr double kSingularFluxWindow = 1e-6;  // in units of Phi0

}  // namespace

void validate(const FilterParams& p) {
  require_positive(p.critical_current, "critical current");
  require_positive(p.bare_frequency, "bare filter frequency");
  require_positive(p.bare_inductance, "bare filter inductance");
  require_positive(p.per_unit_length_inductance, "per-unit-length inductance");
  require_positive(p.physical_length, "physical length");
  require_positive(p.filter_impedance, "filter impedance");
  require_positive(p.port_resistance, "port resistance");
  require_positive(p.input_quality, "input quality");
  if (p.input_quality < p.base_quality()) {
    throw ParameterError("input quality " + std::to_string(p.input_quality) + " is below Q_f0 = " +
                         std::to_string(p.base_quality()));
  }
}

double flux_from_quanta(double phi_over_phi0) { return phi_over_phi0 * kFluxQuantum; }

double squid_inductance(const FilterParams& p, double flux) {
  require_positive(p.critical_current, "critical current");
  if (!std::isfinite(flux)) throw ParameterError("flux bias must be finite");
  const double turns = flux / kFluxQuantum;
  const double to_half = std::abs(std::remainder(turns - 0.5, 1.0));
  if (to_half < kSingularFluxWindow) {
    throw DivergenceError("SQUID inductance diverges at flux bias " + std::to_string(turns) + " Phi0");
  }
  return kFluxQuantum / (4.0 * kPi * p.critical_current * std::abs(std::cos(kPi * turns)));
}

double filter_frequency(const FilterParams& p, double squid_inductance) {
  if (!(squid_inductance >= 0.0) || !std::isfinite(squid_inductance)) {
    throw ParameterError("SQUID inductance must be non-negative");
  }
  return p.bare_frequency / (1.0 + squid_inductance / p.bare_inductance);
}

double output_quality(const FilterParams& p, double squid_inductance) {
  const double arg = kPi * squid_inductance / p.total_inductance();
  if (!std::isfinite(arg) || arg < 0.0 || arg > kPi) {
    throw ParameterError("SQUID inductance outside (0, L_u l_p)");
  }
  const double s = std::sin(arg);
  if (std::abs(s) < 1e-12) throw DivergenceError("output quality diverges: SQUID at a current node");
  return p.base_quality() / (s * s);
}

double total_quality(double q_out, double q_in) {
  require_positive(q_out, "output quality");
  require_positive(q_in, "input quality");
  return 1.0 / (1.0 / q_out + 1.0 / q_in);
}

std::vector<TuningPoint> tuning_curve(const FilterParams& p, std::span<const double> fluxes) {
  std::vector<TuningPoint> out;
  out.reserve(fluxes.size());
  for (double phi : fluxes) {
    TuningPoint pt;
    pt.flux = phi;
    try {
      const double ls = squid_inductance(p, phi);
      pt.frequency = filter_frequency(p, ls);
      pt.quality = total_quality(output_quality(p, ls), p.input_quality);
      pt.linewidth = pt.frequency / pt.quality;
      pt.valid = true;
    } catch (const DivergenceError&) {
      pt = TuningPoint{phi, 0.0, 0.0, 0.0, false};
    } catch (const ParameterError&) {
      pt = TuningPoint{phi, 0.0, 0.0, 0.0, false};
    }
    out.push_back(pt);
  }
  return out;
}

CalibratedParams calibrate_params(const RegimeTargets& t, double total_inductance, double physical_length,
                                  double input_quality, double port_resistance) {
  require_positive(t.read_on_frequency, "read-on frequency");
  require_positive(t.read_on_linewidth, "read-on linewidth");
  require_positive(t.read_off_frequency, "read-off frequency");
  require_positive(t.read_off_linewidth, "read-off linewidth");
  require_positive(total_inductance, "total filter inductance");
  require_positive(physical_length, "physical length");
  if (t.read_on_frequency >= t.read_off_frequency) {
    throw ParameterError("read-on frequency must lie below the zero-flux read-off frequency");
  }
  auto output_q = [&](double f, double k) {
    const double inv = k / f - 1.0 / input_quality;
    if (!(inv > 0.0)) throw ParameterError("target linewidth is narrower than the input coupling allows");
    return 1.0 / inv;
  };
  const double q_on = output_q(t.read_on_frequency, t.read_on_linewidth);
  const double q_off = output_q(t.read_off_frequency, t.read_off_linewidth);
  const double want = q_off / q_on;  // = sin^2(pi x_on) / sin^2(pi x_off)

  // With L_f0 = L_u l_p, x = L_S / L_f0 = f0 / f - 1. Bisection on f0: the ratio
  // falls monotonically from +inf as f0 rises above the read-off frequency.
  auto x_of = [](double f0, double f) { return f0 / f - 1.0; };
  auto ratio = [&](double f0) {
    const double a = std::sin(kPi * x_of(f0, t.read_on_frequency));
    const double b = std::sin(kPi * x_of(f0, t.read_off_frequency));
    return (a * a) / (b * b);
  };
  double lo = t.read_off_frequency * (1.0 + 1e-12);
  // Keep the read-on point on the rising side of the sine (x_on <= 1/2).
  double hi = 1.5 * t.read_on_frequency;
  if (ratio(hi) > want) throw NotFoundError("no filter frequency reproduces the requested Q ratio");
  for (int i = 0; i < 200 && hi - lo > 1e-9 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) > want ? lo : hi) = mid;
  }
  const double f0 = 0.5 * (lo + hi);
  const double x_on = x_of(f0, t.read_on_frequency);
  const double x_off = x_of(f0, t.read_off_frequency);
  const double s_on = std::sin(kPi * x_on);

  CalibratedParams out;
  FilterParams& p = out.params;
  p.bare_frequency = angular(f0);
  p.bare_inductance = total_inductance;
  p.physical_length = physical_length;
  p.per_unit_length_inductance = total_inductance / physical_length;
  p.port_resistance = port_resistance;
  p.filter_impedance = port_resistance / (q_on * s_on * s_on);
  p.input_quality = input_quality;
  const double l_off = x_off * total_inductance;
  const double l_on = x_on * total_inductance;
  p.critical_current = kFluxQuantum / (4.0 * kPi * l_off);
  out.read_off_flux = 0.0;
  out.read_on_flux = kFluxQuantum * std::acos(l_off / l_on) / kPi;
  validate(p);
  return out;
}

FilterParams match_network(const network::FilterGeometry& geometry, std::span<const double> inductances,
                           double physical_length, double critical_current) {
  if (inductances.size() < 3) throw ParameterError("need at least three SQUID inductances to match");
  const auto n = static_cast<Eigen::Index>(inductances.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd inv_w(n), inv_q(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto peak = network::measure_filter(geometry, inductances[static_cast<std::size_t>(i)]);
    a(i, 0) = 1.0;
    a(i, 1) = inductances[static_cast<std::size_t>(i)];
    inv_w[i] = 1.0 / angular(peak.center_frequency);
    inv_q[i] = peak.linewidth_fwhm / peak.center_frequency;
  }
  const Eigen::Vector2d w = a.colPivHouseholderQr().solve(inv_w);
  FilterParams p;
  p.bare_frequency = 1.0 / w[0];
  p.bare_inductance = w[0] / w[1];
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::sin(kPi * inductances[static_cast<std::size_t>(i)] / p.bare_inductance);
    // Rows scaled by the measured 1/Q so the fit minimizes relative linewidth error.
    a(i, 0) = 1.0 / inv_q[i];
    a(i, 1) = s * s / inv_q[i];
  }
  const Eigen::Vector2d q = a.colPivHouseholderQr().solve(Eigen::VectorXd::Ones(n));
  p.physical_length = physical_length;
  p.per_unit_length_inductance = p.bare_inductance / physical_length;
  p.port_resistance = geometry.port_impedance;
  p.filter_impedance = p.port_resistance * q[1];
  p.input_quality = q[0] > 0.0 ? 1.0 / q[0] : 1e12;
  p.critical_current = critical_current;
  validate(p);
  return p;
}

}  // namespace purcell::filter
