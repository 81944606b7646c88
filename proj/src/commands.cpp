#include "purcell/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "purcell/constants.hpp"
#include "purcell/errors.hpp"
#include "purcell/resonance.hpp"
#include "purcell/rng.hpp"

namespace purcell::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// JSON has no inf/nan; those become null.
nlohmann::ordered_json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

class Csv {
 public:
  Csv(RunReport& report, const fs::path& dir, const std::string& name, const std::vector<std::string>& header)
      : out_(dir / name) {
    if (!out_) throw std::runtime_error("cannot write " + (dir / name).string());
    report.outputs.push_back(name);
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void require(bool present, const std::string& what) {
  if (!present) throw ConfigError(what);
}

std::string bias_tag(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", k);
  return buf;
}

struct ResolvedFilter {
  filter::FilterParams params;
  double read_on_flux = std::numeric_limits<double>::quiet_NaN();  // Phi / Phi0
};

std::optional<ResolvedFilter> resolve_filter(const config::DeviceConfig& d) {
  if (d.filter) return ResolvedFilter{*d.filter};
  if (!d.filter_calibration) return std::nullopt;
  const auto& c = *d.filter_calibration;
  const auto cal = filter::calibrate_params(c.targets, c.total_inductance, c.physical_length, c.input_quality,
                                            c.port_resistance);
  return ResolvedFilter{cal.params, cal.read_on_flux / kFluxQuantum};
}

}  // namespace

RunReport cmd_sweep(const config::RunConfig& cfg, const fs::path& out) {
  require(cfg.device.has_value(), "sweep needs a device section");
  require(cfg.sweep.has_value(), "sweep needs a sweep section");
  const auto& dev = *cfg.device;
  const auto& sw = *cfg.sweep;
  const bool closed_form = dev.filter || dev.filter_calibration;
  require(closed_form || dev.netlist, "sweep needs device.filter or device.netlist");
  if (dev.netlist && !sw.critical_current && !dev.netlist_calibration && !closed_form) {
    throw ConfigError("sweep: the netlist SQUID needs sweep.critical_current_ua, netlist targets or device.filter");
  }

  RunReport rep;
  rep.command = "sweep";
  fs::create_directories(out);

  std::optional<ResolvedFilter> rf = resolve_filter(dev);
  if (rf) {
    auto& s = rep.summary["closed_form"];
    s["bare_frequency_ghz"] = cyclic(rf->params.bare_frequency) / 1e9;
    s["base_quality"] = rf->params.base_quality();
    s["filter_impedance_ohm"] = rf->params.filter_impedance;
    s["critical_current_ua"] = rf->params.critical_current * 1e6;
    if (!std::isnan(rf->read_on_flux)) s["read_on_flux_phi0"] = rf->read_on_flux;

    std::vector<double> fluxes;
    for (double b : sw.flux_biases) fluxes.push_back(filter::flux_from_quanta(b));
    const auto curve = filter::tuning_curve(rf->params, fluxes);
    Csv csv(rep, out, "tuning.csv", {"phi_over_phi0", "f_ghz", "kappa_mhz", "q"});
    for (std::size_t k = 0; k < curve.size(); ++k) {
      if (!curve[k].valid) {
        rep.log.push_back("tuning: flux bias " + num(sw.flux_biases[k]) + " Phi0 skipped (singular SQUID inductance)");
        continue;
      }
      csv.row({num(sw.flux_biases[k]), num(cyclic(curve[k].frequency) / 1e9), num(cyclic(curve[k].linewidth) / 1e6),
               num(curve[k].quality)});
    }
  }

  if (dev.netlist) {
    network::FilterGeometry g = *dev.netlist;
    double ic = 0.0;
    if (dev.netlist_calibration) {
      const auto& c = *dev.netlist_calibration;
      const auto cal = network::calibrate_filter(g, c.read_on_inductance_guess, c.read_off_inductance_guess, c.targets);
      g = cal.geometry;
      // Read-off sits at zero flux, where L_S = Phi0 / (4 pi I_c).
      ic = kFluxQuantum / (4.0 * kPi * cal.read_off_inductance);
      auto& s = rep.summary["netlist"];
      s["line_frequency_ghz"] = g.line_frequency / 1e9;
      s["line_impedance_ohm"] = g.line_impedance;
      s["read_on_inductance_nh"] = cal.read_on_inductance * 1e9;
      s["read_off_inductance_nh"] = cal.read_off_inductance * 1e9;
      s["read_on_flux_phi0"] = std::acos(cal.read_off_inductance / cal.read_on_inductance) / kPi;
    }
    if (sw.critical_current) {
      ic = *sw.critical_current;
    } else if (ic == 0.0) {
      ic = rf->params.critical_current;
    }
    rep.summary["netlist_critical_current_ua"] = ic * 1e6;
    filter::FilterParams squid;
    squid.critical_current = ic;

    const auto grid = network::linear_grid(sw.start, sw.stop, sw.points);
    Csv peaks(rep, out, "filter_peaks.csv", {"phi_over_phi0", "squid_inductance_nh", "f_ghz", "kappa_mhz", "file"});
    for (std::size_t k = 0; k < sw.flux_biases.size(); ++k) {
      const double b = sw.flux_biases[k];
      double l;
      try {
        l = filter::squid_inductance(squid, filter::flux_from_quanta(b));
      } catch (const DivergenceError&) {
        rep.log.push_back("s21: flux bias " + num(b) + " Phi0 skipped (singular SQUID inductance)");
        continue;
      }
      const auto net = network::filter_network(g, l, sw.with_resonators);
      const auto spectrum = network::s21_sweep(net, grid);
      const std::string name = "s21_bias_" + bias_tag(k) + ".csv";
      {
        Csv csv(rep, out, name, {"freq_hz", "re_s21", "im_s21", "mag_db"});
        for (const auto& s : spectrum) {
          if (!s.valid) continue;
          csv.row({num(s.frequency), num(s.s21.real()), num(s.s21.imag()), num(20.0 * std::log10(std::abs(s.s21)))});
        }
      }
      double f = std::numeric_limits<double>::quiet_NaN(), kappa = f;
      try {
        const auto p = network::extract_resonance(spectrum, {sw.start, sw.stop});
        f = p.center_frequency;
        kappa = p.linewidth_fwhm;
      } catch (const NotFoundError& e) {
        rep.log.push_back("s21: no filter peak at bias " + num(b) + " Phi0: " + e.what());
      } catch (const FitError& e) {
        rep.log.push_back("s21: filter fit failed at bias " + num(b) + " Phi0: " + e.what());
      }
      peaks.row({num(b), num(l * 1e9), num(f / 1e9), num(kappa / 1e6), name});
    }
  }
  return rep;
}

RunReport cmd_readout(const config::RunConfig& cfg, const fs::path& out) {
  require(cfg.readout.has_value(), "readout needs a readout section");
  const auto& rc = *cfg.readout;
  RunReport rep;
  rep.command = "readout";
  rep.seeds["readout"] = rc.seed;
  fs::create_directories(out);

  Csv table(rep, out, "fidelity.csv",
            {"label", "snr", "fidelity", "fidelity_fitted_threshold", "expected_fidelity", "readout_error",
             "relaxation_error", "separation_error", "residual"});
  double sum = 0.0;
  for (std::size_t k = 0; k < rc.pulses.size(); ++k) {
    const auto& spec = rc.pulses[k];
    const std::uint64_t seed = rng::stream_seed(rc.seed, k);
    const auto g = measurement::simulate_shots(spec, measurement::State::kGround, rc.shots, seed);
    const auto e = measurement::simulate_shots(spec, measurement::State::kExcited, rc.shots, seed);
    const auto disc = measurement::ideal_discriminator(spec);
    const double f = measurement::fidelity(g, e, disc);
    const double f_fit = measurement::fidelity(g, e, measurement::fit_discriminator(g, e));
    const auto b = measurement::error_budget(spec, f);
    table.row({spec.label, num(spec.snr), num(f), num(f_fit), num(measurement::expected_fidelity(spec)),
               num(b.readout_error), num(b.relaxation_error), num(b.separation_error), num(b.residual)});
    sum += f;

    Csv hist(rep, out, "histogram_" + spec.label + ".csv", {"projection", "count_ground", "count_excited"});
    for (const auto& bin : measurement::histogram(g, e, disc, rc.histogram_bins)) {
      hist.row({num(bin.center), std::to_string(bin.count_g), std::to_string(bin.count_e)});
    }
    rep.summary["fidelity"][spec.label] = f;
  }
  rep.summary["average_fidelity"] = sum / static_cast<double>(rc.pulses.size());

  if (rc.pulses.size() > 1) {
    const std::size_t n = rc.pulses.size();
    auto crosstalk = rc.crosstalk;
    if (crosstalk.empty()) crosstalk.assign(n, std::vector<double>(n, 0.0));
    const auto m = measurement::multiplexed_assignment(rc.pulses, crosstalk, rc.matrix_shots,
                                                       rng::stream_seed(rc.seed, 1u << 20));
    auto bits = [&](std::size_t s) {
      std::string out_bits;
      for (std::size_t q = n; q-- > 0;) out_bits += ((s >> q) & 1u) ? '1' : '0';
      return out_bits;
    };
    std::vector<std::string> header{"prepared"};
    for (std::size_t a = 0; a < m.dim(); ++a) header.push_back("p_" + bits(a));
    Csv mat(rep, out, "assignment_matrix.csv", header);
    for (std::size_t p = 0; p < m.dim(); ++p) {
      std::vector<std::string> row{bits(p)};
      for (std::size_t a = 0; a < m.dim(); ++a) row.push_back(num(m.at(p, a)));
      mat.row(row);
    }
    Csv cross(rep, out, "cross_fidelity.csv", {"measured", "prepared", "cross_fidelity"});
    double joint = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      joint += m.qubit_fidelity(i);
      rep.summary["simultaneous_fidelity"][rc.pulses[i].label] = m.qubit_fidelity(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) cross.row({rc.pulses[i].label, rc.pulses[j].label, num(m.cross_fidelity(i, j))});
      }
    }
    rep.summary["average_simultaneous_fidelity"] = joint / static_cast<double>(n);
  }
  return rep;
}

RunReport cmd_leakage(const config::RunConfig& cfg, const fs::path& out) {
  require(cfg.leakage.has_value(), "leakage needs a leakage section");
  const auto& lc = *cfg.leakage;
  RunReport rep;
  rep.command = "leakage";
  rep.seeds["leakage"] = lc.seed;
  fs::create_directories(out);

  leakage::SequenceSchedule pi;
  pi.cycles = lc.cycles;
  leakage::SequenceSchedule rc = pi;
  rc.interleave = leakage::Interleave::kRandomBitFlip;
  rc.initial_gate = leakage::InitialGate::kIdentity;

  Csv fits(rep, out, "fits.csv",
           {"label", "method", "planted_leak", "planted_seep", "leak", "leak_sigma", "seep", "seep_sigma",
            "amplitude", "offset", "rate_sum", "zero_rate", "leak_z", "seep_z"});
  Csv agree(rep, out, "agreement.csv", {"label", "leak_difference", "leak_joint_sigma", "seep_difference",
                                        "seep_joint_sigma", "agree_2sigma"});

  auto z = [](double est, double truth, double sigma) {
    if (sigma > 0.0) return (est - truth) / sigma;
    return est == truth ? 0.0 : std::numeric_limits<double>::infinity();
  };
  auto write_series = [&](const std::string& name, const leakage::PlantedResult& r) {
    Csv csv(rep, out, name, {"m", "p_cond", "stderr"});
    for (std::size_t k = 0; k < r.pooled_series.size(); ++k) {
      const double p = r.pooled_series[k];
      const double n = static_cast<double>(r.pooled_counts[k]);
      csv.row({std::to_string(k + 1), num(p), num(n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0)});
    }
  };
  auto write_fit = [&](const std::string& label, const char* method, const leakage::LeakageChain& ch,
                       const leakage::PlantedResult& r) {
    const auto& f = r.pooled;
    fits.row({label, method, num(ch.leak_rate), num(ch.seep_rate), num(f.leak), num(r.leak_sigma), num(f.seep),
              num(r.seep_sigma), num(f.amplitude), num(f.offset), num(f.rate_sum), f.zero_rate ? "1" : "0",
              num(z(f.leak, ch.leak_rate, r.leak_sigma)), num(z(f.seep, ch.seep_rate, r.seep_sigma))});
  };

  for (std::size_t k = 0; k < lc.runs.size(); ++k) {
    const auto& run = lc.runs[k];
    std::optional<leakage::PlantedResult> a, b;
    try {
      if (lc.run_pi_qnd) {
        a = leakage::planted_pi_qnd(run.chain, pi, lc.pi_qnd_shots, lc.repeats, rng::stream_seed(lc.seed, 2 * k));
        write_series("series_" + run.label + "_pi_qnd.csv", *a);
        write_fit(run.label, "pi-qnd", run.chain, *a);
      }
      if (lc.run_random_circuit) {
        b = leakage::planted_random_circuit(run.chain, rc, lc.random_sequences, lc.random_shots, lc.repeats,
                                            rng::stream_seed(lc.seed, 2 * k + 1));
        write_series("series_" + run.label + "_random_circuit.csv", *b);
        write_fit(run.label, "random-circuit", run.chain, *b);
      }
    } catch (const FitError& e) {
      rep.numerical_failure = true;
      rep.log.push_back("leakage " + run.label + ": " + e.what());
      continue;
    }
    auto& s = rep.summary["chains"][run.label];
    if (a) s["pi_qnd"] = {{"leak", a->pooled.leak}, {"seep", a->pooled.seep}, {"zero_rate", a->pooled.zero_rate}};
    if (b) {
      s["random_circuit"] = {{"leak", b->pooled.leak}, {"seep", b->pooled.seep}, {"zero_rate", b->pooled.zero_rate}};
    }
    if (a && b) {
      const double dl = a->pooled.leak - b->pooled.leak;
      const double ds = a->pooled.seep - b->pooled.seep;
      const double sl = std::hypot(a->leak_sigma, b->leak_sigma);
      const double ss = std::hypot(a->seep_sigma, b->seep_sigma);
      const bool ok = std::abs(dl) <= 2.0 * sl && std::abs(ds) <= 2.0 * ss;
      agree.row({run.label, num(dl), num(sl), num(ds), num(ss), ok ? "1" : "0"});
      s["methods_agree_2sigma"] = ok;
    }
  }
  return rep;
}

namespace {

std::string aligned_table(const multiplex::BandReport& r) {
  std::ostringstream os;
  std::size_t w = 8;
  for (const auto& name : r.regimes) w = std::max(w, name.size() + 2);
  os << std::left << std::setw(10) << "band";
  for (const auto& name : r.regimes) os << std::right << std::setw(static_cast<int>(w)) << name;
  os << std::setw(12) << "ON/OFF" << '\n';
  for (std::size_t b = 0; b < r.bands.size(); ++b) {
    os << std::left << std::setw(10) << r.bands[b] << std::right << std::fixed << std::setprecision(3);
    for (double m : r.band_mean[b]) os << std::setw(static_cast<int>(w)) << m / 1e6;
    if (std::isnan(r.on_off_ratio[b])) {
      os << std::setw(12) << "-";
    } else {
      os << std::setw(12) << std::setprecision(1) << r.on_off_ratio[b];
    }
    os << '\n';
  }
  os << "(mean resonator linewidth per band, MHz)\n";
  return os.str();
}

}  // namespace

RunReport cmd_multiplex(const config::RunConfig& cfg, const fs::path& out) {
  require(cfg.multiplex.has_value(), "multiplex needs a multiplex section");
  const auto& ms = *cfg.multiplex;
  RunReport rep;
  rep.command = "multiplex";
  fs::create_directories(out);

  std::vector<readout::ReadoutChannel> channels;
  for (const auto& label : ms.channels) channels.push_back(config::find_qubit(*cfg.device, label));

  for (const auto& v : ms.variants) {
    const auto device = multiplex::build_variant(v.config);
    const auto report = multiplex::regime_report(device, v.config.regimes);

    std::vector<std::string> header{"label", "band", "frequency_ghz"};
    for (const auto& name : report.regimes) header.push_back("linewidth_mhz_" + name);
    for (const auto& name : report.regimes) header.push_back("upper_bound_" + name);
    Csv csv(rep, out, "multiplex_" + v.name + ".csv", header);
    for (const auto& row : report.resonators) {
      std::vector<std::string> cells{row.label, row.band, num(row.frequency / 1e9)};
      for (double l : row.linewidth) cells.push_back(num(l / 1e6));
      for (bool u : row.upper_bound) cells.push_back(u ? "1" : "0");
      csv.row(cells);
      for (std::size_t k = 0; k < row.upper_bound.size(); ++k) {
        if (row.upper_bound[k]) {
          rep.log.push_back(v.name + ": " + row.label + " unresolved in " + report.regimes[k] + ", value is a bound");
        }
      }
    }
    {
      Csv means(rep, out, "band_means_" + v.name + ".csv", {"band", "regime", "mean_linewidth_mhz"});
      for (std::size_t b = 0; b < report.bands.size(); ++b) {
        for (std::size_t k = 0; k < report.regimes.size(); ++k) {
          means.row({report.bands[b], report.regimes[k], num(report.band_mean[b][k] / 1e6)});
        }
      }
    }
    const std::string text_name = "multiplex_" + v.name + ".txt";
    std::ofstream(out / text_name) << aligned_table(report);
    rep.outputs.push_back(text_name);

    auto& s = rep.summary["variants"][v.name];
    s["line_frequency_ghz"] = device.geometry.line_frequency / 1e9;
    s["line_impedance_ohm"] = device.geometry.line_impedance;
    s["degenerate"] = report.degenerate;
    for (std::size_t b = 0; b < report.bands.size(); ++b) {
      s["on_off_ratio"][report.bands[b]] = jnum(report.on_off_ratio[b]);
      s["band_scale"][report.bands[b]] = device.band_scale[b];
    }

    const bool has_off = std::any_of(v.config.regimes.begin(), v.config.regimes.end(),
                                     [](const multiplex::RegimeSpec& r) { return r.reads_band.empty(); });
    if (channels.empty()) {
      rep.log.push_back(v.name + ": no channels given, protection summary skipped");
    } else if (!has_off) {
      rep.log.push_back(v.name + ": no read-off regime, protection summary skipped");
    } else {
      const auto rows = multiplex::protection_summary(report, device, v.config.regimes, channels, ms.noise_photons);
      Csv p(rep, out, "protection_" + v.name + ".csv",
            {"band", "on_off_ratio", "idle_dephasing_rate_per_s", "read_on_dephasing_rate_per_s", "idle_purcell_t1_us"});
      for (const auto& r : rows) {
        p.row({r.band, num(r.on_off_ratio), num(r.idle_dephasing_rate), num(r.read_on_dephasing_rate),
               num(r.idle_purcell_t1 * 1e6)});
      }
    }
  }
  return rep;
}

void write_report(const RunReport& r, const fs::path& out) {
  nlohmann::ordered_json j;
  j["tool"] = "purcell";
  j["version"] = kToolVersion;
  j["command"] = r.command;
  j["status"] = r.numerical_failure ? "partial" : "ok";
  j["outputs"] = r.outputs;
  j["seeds"] = r.seeds;
  j["summary"] = r.summary;
  j["log"] = r.log;
  std::ofstream(out / "run_report.json") << j.dump(2) << '\n';
}

int run(const std::string& command, const fs::path& config_path, const fs::path& out,
        std::optional<std::uint64_t> seed_override, std::ostream& err) {
  try {
    auto cfg = config::load(config_path);
    if (seed_override) config::override_seeds(cfg, *seed_override);
    if (command == "multiplex" && cfg.multiplex && !cfg.multiplex->channels.empty() && !cfg.device) {
      throw ConfigError("multiplex channels need a device section");
    }
    RunReport rep;
    if (command == "sweep") {
      rep = cmd_sweep(cfg, out);
    } else if (command == "readout") {
      rep = cmd_readout(cfg, out);
    } else if (command == "leakage") {
      rep = cmd_leakage(cfg, out);
    } else if (command == "multiplex") {
      rep = cmd_multiplex(cfg, out);
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
    write_report(rep, out);
    for (const auto& line : rep.log) err << line << '\n';
    return rep.numerical_failure ? kNumericalFailure : kSuccess;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace purcell::cli
