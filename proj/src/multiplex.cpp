#include "purcell/multiplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "purcell/constants.hpp"
#include "purcell/errors.hpp"

namespace purcell::multiplex {

namespace {

const RegimeSpec* read_on_regime(const std::vector<RegimeSpec>& regimes, const std::string& band) {
  for (const auto& r : regimes) {
    if (r.reads_band == band) return &r;
  }
  return nullptr;
}

const RegimeSpec* read_off_regime(const std::vector<RegimeSpec>& regimes) {
  for (const auto& r : regimes) {
    if (r.reads_band.empty()) return &r;
  }
  return nullptr;
}

double search_half_window(const Device& d, std::size_t index) {
  double half = 30e6;
  const auto& f = d.design_frequencies;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (k != index) half = std::min(half, 0.5 * std::abs(f[k] - f[index]));
  }
  return half;
}

// Follows the peak of resonator `index` from its design point to `inductance`, halving the step whenever the peak leaves the window.
network::ResonancePeak track(const Device& d, double from_l, double from_f, double to_l, std::size_t index,
                             int depth) {
  const double half = search_half_window(d, index);
  try {
    return network::measure_resonator(d.geometry, to_l, index, network::FrequencyWindow{from_f - half, from_f + half});
  } catch (const NotFoundError&) {
    if (depth == 0 || from_l == to_l) throw;
  } catch (const FitError&) {
    if (depth == 0 || from_l == to_l) throw;
  }
  const double mid = 0.5 * (from_l + to_l);
  const auto p = track(d, from_l, from_f, mid, index, depth - 1);
  return track(d, mid, p.center_frequency, to_l, index, depth - 1);
}

network::ResonancePeak measure(const Device& d, double inductance, std::size_t index) {
  return track(d, d.design_inductance[index], d.design_frequencies[index], inductance, index, 6);
}

std::vector<std::size_t> members(const Device& d, const std::string& band) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.geometry.resonators.size(); ++i) {
    if (d.geometry.resonators[i].band == band) out.push_back(i);
  }
  return out;
}

double band_mean_linewidth(const Device& d, const std::string& band, double inductance) {
  const auto idx = members(d, band);
  double acc = 0.0;
  for (std::size_t i : idx) acc += measure(d, inductance, i).linewidth_fwhm;
  return acc / static_cast<double>(idx.size());
}

}  // namespace

void validate(const MultiplexConfig& c) {
  network::validate(c.filter);
  if (c.bands.empty()) throw ConfigError("multiplex study needs at least one band");
  if (!(c.initial_coupling > 0.0)) throw ConfigError("initial coupling capacitance must be positive");
  for (std::size_t i = 0; i < c.bands.size(); ++i) {
    const auto& b = c.bands[i];
    if (b.label.empty()) throw ConfigError("band label must not be empty");
    if (!(b.center > 0.0) || !(b.span >= 0.0) || b.count == 0) {
      throw ConfigError("band " + b.label + " needs a positive center and at least one resonator");
    }
    if (b.count > 1 && b.span == 0.0) throw ConfigError("band " + b.label + " has several resonators but no span");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = c.bands[j];
      if (o.label == b.label) throw ConfigError("duplicate band label " + b.label);
      if (std::abs(o.center - b.center) <= 0.5 * (o.span + b.span)) {
        throw ConfigError("bands " + o.label + " and " + b.label + " overlap");
      }
    }
  }
  for (const auto& r : c.regimes) {
    if (!(r.squid_inductance > 0.0) || !std::isfinite(r.squid_inductance)) {
      throw ConfigError("regime " + r.name + " needs a positive SQUID inductance");
    }
    if (!r.reads_band.empty() &&
        std::none_of(c.bands.begin(), c.bands.end(), [&](const BandSpec& b) { return b.label == r.reads_band; })) {
      throw ConfigError("regime " + r.name + " reads unknown band " + r.reads_band);
    }
  }
  if (c.regimes.empty()) throw ConfigError("multiplex study needs at least one regime");
}

std::vector<double> band_frequencies(const BandSpec& b) {
  std::vector<double> f;
  for (std::size_t k = 0; k < b.count; ++k) {
    const double u = b.count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(b.count - 1) - 0.5;
    f.push_back(b.center + u * b.span);
  }
  return f;
}

Device build_variant(const MultiplexConfig& c) {
  validate(c);
  Device d;
  d.geometry = c.filter;
  d.geometry.resonators.clear();

  if (c.align_filter && c.bands.size() >= 2) {
    const RegimeSpec* a = read_on_regime(c.regimes, c.bands[0].label);
    const RegimeSpec* b = read_on_regime(c.regimes, c.bands[1].label);
    if (a && b && a->squid_inductance != b->squid_inductance) {
      network::align_filter(d.geometry, {a->squid_inductance, b->squid_inductance},
                            {c.bands[0].center, c.bands[1].center});
    }
  }

  for (const auto& band : c.bands) {
    const auto freqs = band_frequencies(band);
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      network::ResonatorStub r;
      r.label = band.label + "-" + std::to_string(k + 1);
      r.band = band.label;
      r.stub_frequency = freqs[k] * 1.005;
      r.coupling_capacitance = c.initial_coupling;
      d.geometry.resonators.push_back(r);
      d.design_frequencies.push_back(freqs[k]);
    }
  }
  d.band_scale.assign(c.bands.size(), 1.0);

  const RegimeSpec* off = read_off_regime(c.regimes);
  for (const auto& band : c.bands) {
    const RegimeSpec* on = read_on_regime(c.regimes, band.label);
    const double l = on ? on->squid_inductance : off ? off->squid_inductance : c.regimes.front().squid_inductance;
    for (std::size_t k = 0; k < band.count; ++k) d.design_inductance.push_back(l);
  }
  // Pulls grow with the coupling, so the search widens until the peak is found.
  auto place = [&](std::size_t i) {
    const double f0 = d.design_frequencies[i];
    const double l = d.design_inductance[i];
    for (double half = search_half_window(d, i);; half *= 2.0) {
      try {
        return network::measure_resonator(d.geometry, l, i, network::FrequencyWindow{f0 - half, f0 + half})
            .center_frequency;
      } catch (const NotFoundError&) {
        if (half > 0.1 * f0) throw;
      } catch (const FitError&) {
        if (half > 0.1 * f0) throw;
      }
    }
  };
  auto retune = [&] {
    for (std::size_t i = 0; i < d.geometry.resonators.size(); ++i) {
      for (int it = 0; it < 40; ++it) {
        const double f = place(i);
        if (std::abs(f / d.design_frequencies[i] - 1.0) < 1e-7) break;
        d.geometry.resonators[i].stub_frequency *= d.design_frequencies[i] / f;
      }
    }
  };
  retune();

  // Bands load each other, so all scales are updated together.
  if (c.calibrate) {
    for (int it = 0; it < 40; ++it) {
      bool done = true;
      std::vector<double> steps(c.bands.size(), 1.0);
      for (std::size_t b = 0; b < c.bands.size(); ++b) {
        const RegimeSpec* on = read_on_regime(c.regimes, c.bands[b].label);
        if (!on || !(c.bands[b].target_linewidth > 0.0)) continue;
        const double ratio = c.bands[b].target_linewidth / band_mean_linewidth(d, c.bands[b].label, on->squid_inductance);
        if (std::abs(ratio - 1.0) >= 1e-3) done = false;
        steps[b] = std::sqrt(ratio);
      }
      if (done) break;
      for (std::size_t b = 0; b < c.bands.size(); ++b) {
        d.band_scale[b] *= steps[b];
        for (std::size_t i : members(d, c.bands[b].label)) d.geometry.resonators[i].coupling_capacitance *= steps[b];
      }
      retune();
    }
  }
  return d;
}

network::CircuitNetwork device_network(const Device& d, double squid_inductance) {
  return network::filter_network(d.geometry, squid_inductance, true);
}

BandReport regime_report(const Device& d, const std::vector<RegimeSpec>& regimes) {
  if (regimes.empty()) throw ParameterError("regime report needs at least one regime");
  BandReport rep;
  for (const auto& r : regimes) rep.regimes.push_back(r.name);
  for (const auto& s : d.geometry.resonators) {
    if (std::find(rep.bands.begin(), rep.bands.end(), s.band) == rep.bands.end()) rep.bands.push_back(s.band);
  }
  rep.degenerate = std::all_of(regimes.begin(), regimes.end(), [&](const RegimeSpec& r) {
    return r.squid_inductance == regimes.front().squid_inductance;
  });

  for (std::size_t i = 0; i < d.geometry.resonators.size(); ++i) {
    ResonatorRow row;
    row.label = d.geometry.resonators[i].label;
    row.band = d.geometry.resonators[i].band;
    row.frequency = d.design_frequencies[i];
    for (const auto& r : regimes) {
      try {
        row.linewidth.push_back(measure(d, r.squid_inductance, i).linewidth_fwhm);
        row.upper_bound.push_back(false);
      } catch (const NotFoundError&) {
        row.linewidth.push_back(2.0 * search_half_window(d, i) / 2000.0);
        row.upper_bound.push_back(true);
      } catch (const FitError&) {
        row.linewidth.push_back(2.0 * search_half_window(d, i) / 2000.0);
        row.upper_bound.push_back(true);
      }
    }
    rep.resonators.push_back(std::move(row));
  }

  const RegimeSpec* off = read_off_regime(regimes);
  for (const auto& band : rep.bands) {
    std::vector<double> mean(regimes.size(), 0.0);
    std::size_t n = 0;
    for (const auto& row : rep.resonators) {
      if (row.band != band) continue;
      ++n;
      for (std::size_t k = 0; k < regimes.size(); ++k) mean[k] += row.linewidth[k];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    double ratio = std::numeric_limits<double>::quiet_NaN();
    const RegimeSpec* on = read_on_regime(regimes, band);
    if (on && off) {
      const auto k_on = static_cast<std::size_t>(on - regimes.data());
      const auto k_off = static_cast<std::size_t>(off - regimes.data());
      ratio = mean[k_on] / mean[k_off];
    }
    rep.band_mean.push_back(std::move(mean));
    rep.on_off_ratio.push_back(ratio);
  }
  return rep;
}

std::vector<ProtectionRow> protection_summary(const BandReport& report, const Device& d,
                                              const std::vector<RegimeSpec>& regimes,
                                              const std::vector<readout::ReadoutChannel>& channels,
                                              double noise_photons) {
  if (channels.size() != report.bands.size()) throw ParameterError("one readout channel per band");
  if (regimes.size() != report.regimes.size()) throw ParameterError("regimes do not match the report");
  const RegimeSpec* off = read_off_regime(regimes);
  if (!off) throw ParameterError("protection summary needs a read-off regime");
  const auto k_off = static_cast<std::size_t>(off - regimes.data());

  const auto filter = network::measure_filter(d.geometry, off->squid_inductance);
  const double w_f = angular(filter.center_frequency);
  const double q_f = filter.center_frequency / filter.linewidth_fwhm;

  std::vector<ProtectionRow> rows;
  for (std::size_t b = 0; b < report.bands.size(); ++b) {
    ProtectionRow row;
    row.band = report.bands[b];
    row.on_off_ratio = report.on_off_ratio[b];
    const auto& means = report.band_mean[b];
    const double k_idle = angular(means[k_off]);
    const RegimeSpec* on = read_on_regime(regimes, row.band);
    const double k_on = on ? angular(means[static_cast<std::size_t>(on - regimes.data())]) : k_idle;
    row.idle_dephasing_rate = readout::photon_dephasing_rate(channels[b], k_idle, noise_photons);
    row.read_on_dephasing_rate = readout::photon_dephasing_rate(channels[b], k_on, noise_photons);
    row.idle_purcell_t1 = readout::purcell_t1(channels[b], w_f, q_f, k_idle);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace purcell::multiplex
