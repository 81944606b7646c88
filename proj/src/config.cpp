#include "purcell/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "purcell/constants.hpp"
#include "purcell/errors.hpp"

namespace purcell::config {

namespace {

using nlohmann::json;

// Walks one JSON object, remembers the path for messages and rejects keys that
// were never read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("must be an object");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) fail("missing key '" + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail("'" + key + "' must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

  double positive(const std::string& key) {
    const double x = number(key);
    if (!(x > 0.0)) fail("'" + key + "' must be positive");
    return x;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : mark(key, fallback); }

  double probability(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (x < 0.0 || x > 1.0) fail("'" + key + "' must lie in [0, 1]");
    return x;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum = 1) {
    if (!has(key)) return mark(key, fallback);
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum)) {
      fail("'" + key + "' must be an integer >= " + std::to_string(minimum));
    }
    return v.get<std::size_t>();
  }

  std::uint64_t seed(const std::string& key) {
    if (!has(key)) fail("missing seed '" + key + "' (seeds are mandatory for stochastic runs)");
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail("'" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : mark(key, fallback);
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return mark(key, fallback);
    const json& v = raw(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::vector<json> list(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be a list");
    return {v.begin(), v.end()};
  }

  Section child(const std::string& key) { return Section(raw(key), path_ + "." + key); }
  Section item(const json& j, std::size_t i, const std::string& key) const {
    return Section(j, path_ + "." + key + "[" + std::to_string(i) + "]");
  }
  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

 private:
  template <class T>
  T mark(const std::string& key, T v) {
    seen_.insert(key);
    return v;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Library validators throw ParameterError; inside config loading that is a
// configuration problem.
template <class F>
void check(const std::string& where, F&& f) {
  try {
    f();
  } catch (const ParameterError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

filter::RegimeTargets regime_targets(Section& s) {
  filter::RegimeTargets t{ghz(s.positive("read_on_frequency_ghz")), mhz(s.positive("read_on_linewidth_mhz")),
                          ghz(s.positive("read_off_frequency_ghz")), mhz(s.positive("read_off_linewidth_mhz"))};
  if (t.read_on_frequency >= t.read_off_frequency) s.fail("read-on frequency must lie below read-off frequency");
  return t;
}

network::FilterVariant variant_of(Section& s) {
  const std::string v = s.text("variant", "variable");
  if (v == "variable") return network::FilterVariant::kVariableBandwidth;
  if (v == "fixed") return network::FilterVariant::kFixedBandwidth;
  s.fail("variant must be 'variable' or 'fixed', got '" + v + "'");
}

// Filter geometry keys shared by the device netlist and the multiplex variants.
network::FilterGeometry geometry_fields(Section& s) {
  network::FilterGeometry g;
  g.variant = variant_of(s);
  g.line_frequency = ghz(s.positive("line_frequency_ghz", g.line_frequency / 1e9));
  g.line_impedance = s.positive("line_impedance_ohm", g.line_impedance);
  g.port_impedance = s.positive("port_impedance_ohm", g.port_impedance);
  g.input_coupling = ff(s.positive("input_coupling_ff", g.input_coupling / 1e-15));
  g.tap_fraction = s.number("tap_fraction", g.tap_fraction);
  g.port_tap_fraction = s.number("port_tap_fraction", g.port_tap_fraction);
  g.probe_coupling = ff(s.positive("probe_coupling_ff", g.probe_coupling / 1e-15));
  return g;
}

DeviceConfig device_section(Section s) {
  DeviceConfig d;
  if (s.has("filter")) {
    Section f = s.child("filter");
    const double total = nh(f.positive("total_inductance_nh"));
    const double length = f.positive("physical_length_mm") * 1e-3;
    const double q_in = f.positive("input_quality", 700.0);
    const double r0 = f.positive("port_resistance_ohm", 50.0);
    if (f.has("targets")) {
      Section t = f.child("targets");
      d.filter_calibration = FilterCalibration{regime_targets(t), total, length, q_in, r0};
      t.finish();
    } else {
      filter::FilterParams p;
      p.critical_current = f.positive("critical_current_ua") * 1e-6;
      p.bare_frequency = angular(ghz(f.positive("bare_frequency_ghz")));
      p.bare_inductance = total;
      p.per_unit_length_inductance = total / length;
      p.physical_length = length;
      p.filter_impedance = f.positive("filter_impedance_ohm");
      p.port_resistance = r0;
      p.input_quality = q_in;
      check(f.path(), [&] { filter::validate(p); });
      d.filter = p;
    }
    f.finish();
  }
  if (s.has("netlist")) {
    Section n = s.child("netlist");
    network::FilterGeometry g = geometry_fields(n);
    if (n.has("resonators")) {
      const auto items = n.list("resonators");
      for (std::size_t i = 0; i < items.size(); ++i) {
        Section r = n.item(items[i], i, "resonators");
        network::ResonatorStub stub;
        stub.label = r.text("label");
        stub.band = r.text("band", "");
        stub.stub_frequency = ghz(r.positive("stub_frequency_ghz"));
        stub.coupling_capacitance = ff(r.positive("coupling_ff"));
        stub.impedance = r.positive("impedance_ohm", 50.0);
        r.finish();
        g.resonators.push_back(stub);
      }
    }
    if (n.has("targets")) {
      Section t = n.child("targets");
      NetlistCalibration c;
      const auto rt = regime_targets(t);
      c.targets = {rt.read_on_frequency, rt.read_on_linewidth, rt.read_off_frequency, rt.read_off_linewidth};
      c.read_on_inductance_guess = nh(t.positive("read_on_inductance_nh", 0.5));
      c.read_off_inductance_guess = nh(t.positive("read_off_inductance_nh", 0.2));
      t.finish();
      d.netlist_calibration = c;
    }
    n.finish();
    check(n.path(), [&] { network::validate(g); });
    d.netlist = g;
  }
  if (s.has("qubits")) {
    const auto items = s.list("qubits");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < items.size(); ++i) {
      Section q = s.item(items[i], i, "qubits");
      readout::ReadoutChannel ch;
      ch.label = q.text("label");
      if (!labels.insert(ch.label).second) q.fail("duplicate qubit label '" + ch.label + "'");
      ch.qubit_frequency = angular(ghz(q.positive("qubit_frequency_ghz")));
      ch.resonator_frequency = angular(ghz(q.positive("resonator_frequency_ghz")));
      // The table quotes the full state splitting 2 chi.
      ch.dispersive_shift = 0.5 * angular(mhz(q.positive("two_chi_mhz")));
      ch.qubit_resonator_coupling = angular(mhz(q.number("g_qr_mhz", 0.0)));
      ch.resonator_filter_coupling = angular(mhz(q.number("g_rf_mhz", 0.0)));
      ch.intrinsic_t1 = us(q.positive("t1_us", 50.0));
      ch.efficiency = q.number("efficiency", 1.0);
      q.finish();
      check(q.path(), [&] { readout::validate(ch); });
      d.qubits.push_back(ch);
    }
  }
  s.finish();
  return d;
}

SweepConfig sweep_section(Section s) {
  SweepConfig c;
  if (s.has("flux_bias")) {
    for (const auto& v : s.list("flux_bias")) {
      if (!v.is_number()) s.fail("'flux_bias' entries must be numbers");
      c.flux_biases.push_back(v.get<double>());
    }
  }
  if (s.has("flux_grid")) {
    Section g = s.child("flux_grid");
    const double a = g.number("start");
    const double b = g.number("stop");
    const std::size_t n = g.count("points", 101, 2);
    g.finish();
    for (std::size_t k = 0; k < n; ++k) c.flux_biases.push_back(a + (b - a) * static_cast<double>(k) / (n - 1));
  }
  if (c.flux_biases.empty()) s.fail("needs 'flux_bias' or 'flux_grid'");
  if (s.has("frequency")) {
    Section f = s.child("frequency");
    c.start = ghz(f.positive("start_ghz"));
    c.stop = ghz(f.positive("stop_ghz"));
    c.points = f.count("points", 2001, 3);
    f.finish();
    if (c.stop <= c.start) s.fail("frequency stop must exceed start");
  }
  c.with_resonators = s.flag("with_resonators", false);
  if (s.has("critical_current_ua")) c.critical_current = s.positive("critical_current_ua") * 1e-6;
  s.finish();
  return c;
}

measurement::ReadoutPulseSpec pulse_item(Section p) {
  measurement::ReadoutPulseSpec spec;
  spec.label = p.text("label");
  spec.pulse_length = ns(p.positive("pulse_ns", 100.0));
  spec.demod_length = ns(p.positive("demod_ns", 200.0));
  spec.total_length = ns(p.positive("total_ns", 250.0));
  spec.photons_ground = p.number("photons_ground", 0.0);
  spec.photons_excited = p.number("photons_excited", 0.0);
  // No T1 means no relaxation during readout.
  spec.t1_readout = p.has("t1_us") ? us(p.positive("t1_us")) : std::numeric_limits<double>::infinity();
  const std::string model = p.text("relaxation", "window-flip");
  if (model == "window-flip") {
    spec.relaxation = measurement::RelaxationModel::kWindowFlip;
  } else if (model == "linear") {
    spec.relaxation = measurement::RelaxationModel::kLinearIntegration;
  } else {
    p.fail("relaxation must be 'window-flip' or 'linear'");
  }
  const int given = p.has("snr") + p.has("separation_error") + p.has("fidelity_target");
  if (given == 0) p.fail("missing SNR for qubit '" + spec.label + "' (give snr, separation_error or fidelity_target)");
  if (given > 1) p.fail("qubit '" + spec.label + "': give only one of snr, separation_error, fidelity_target");
  if (p.has("snr")) {
    spec.snr = p.number("snr");
    if (spec.snr < 0.0) p.fail("snr must be >= 0");
  } else if (p.has("separation_error")) {
    const double e = p.number("separation_error");
    if (!(e > 0.0 && e <= 0.5)) p.fail("separation_error must lie in (0, 0.5]");
    spec.snr = measurement::snr_for_separation_error(e);
  } else {
    const double f = p.number("fidelity_target");
    const double ceiling = 1.0 - measurement::relaxation_error(spec.demod_length, spec.t1_readout);
    if (!(f > 0.5 && f < ceiling)) p.fail("fidelity_target must lie in (0.5, " + std::to_string(ceiling) + ")");
    spec.snr = measurement::snr_for_fidelity(f, spec.demod_length, spec.t1_readout);
  }
  p.finish();
  check(p.path(), [&] { measurement::validate(spec); });
  return spec;
}

ReadoutConfig readout_section(Section s) {
  ReadoutConfig c;
  c.seed = s.seed("seed");
  c.shots = s.count("shots", c.shots);
  c.histogram_bins = s.count("histogram_bins", c.histogram_bins, 2);
  c.matrix_shots = s.count("matrix_shots", c.matrix_shots);
  const auto items = s.list("pulses");
  if (items.empty()) s.fail("'pulses' must not be empty");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < items.size(); ++i) {
    c.pulses.push_back(pulse_item(s.item(items[i], i, "pulses")));
    if (!labels.insert(c.pulses.back().label).second) s.fail("duplicate pulse label '" + c.pulses.back().label + "'");
  }
  if (c.pulses.size() > 12) s.fail("at most 12 simultaneously read qubits");
  if (s.has("crosstalk")) {
    const auto rows = s.list("crosstalk");
    if (rows.size() != c.pulses.size()) s.fail("crosstalk must be an N x N matrix over the pulses");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || rows[i].size() != c.pulses.size()) s.fail("crosstalk row " + std::to_string(i) + " has the wrong length");
      std::vector<double> row;
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        if (!rows[i][j].is_number()) s.fail("crosstalk entries must be numbers");
        const double v = rows[i][j].get<double>();
        if (i == j && v != 0.0) s.fail("crosstalk diagonal must be zero");
        row.push_back(v);
      }
      c.crosstalk.push_back(std::move(row));
    }
  }
  s.finish();
  return c;
}

LeakageConfig leakage_section(Section s) {
  LeakageConfig c;
  c.seed = s.seed("seed");
  c.cycles = s.count("cycles", c.cycles, 2);
  c.pi_qnd_shots = s.count("pi_qnd_shots", c.pi_qnd_shots);
  c.random_sequences = s.count("random_sequences", c.random_sequences);
  c.random_shots = s.count("random_shots", c.random_shots);
  c.repeats = s.count("repeats", c.repeats);
  if (s.has("methods")) {
    c.run_pi_qnd = c.run_random_circuit = false;
    for (const auto& m : s.list("methods")) {
      const std::string name = m.is_string() ? m.get<std::string>() : "";
      if (name == "pi-qnd") {
        c.run_pi_qnd = true;
      } else if (name == "random-circuit") {
        c.run_random_circuit = true;
      } else {
        s.fail("methods must be 'pi-qnd' and/or 'random-circuit'");
      }
    }
  }
  const double e0 = s.probability("readout_error_0", 0.0);
  const double e1 = s.probability("readout_error_1", 0.0);
  const auto items = s.list("chains");
  if (items.empty()) s.fail("'chains' must not be empty");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Section r = s.item(items[i], i, "chains");
    LeakageRun run;
    run.label = r.text("label");
    if (!labels.insert(run.label).second) r.fail("duplicate chain label '" + run.label + "'");
    run.chain.leak_rate = r.probability("leak_rate", 0.0);
    run.chain.seep_rate = r.probability("seep_rate", 0.0);
    run.chain.error_0 = r.probability("readout_error_0", e0);
    run.chain.error_1 = r.probability("readout_error_1", e1);
    run.chain.leak_reads_one = r.probability("leak_reads_one", 1.0);
    r.finish();
    check(r.path(), [&] { leakage::validate(run.chain); });
    c.runs.push_back(run);
  }
  s.finish();
  return c;
}

MultiplexSection multiplex_section(Section s) {
  MultiplexSection m;
  m.noise_photons = s.number("noise_photons", m.noise_photons);
  if (m.noise_photons < 0.0) s.fail("noise_photons must be >= 0");
  if (s.has("channels")) {
    for (const auto& v : s.list("channels")) {
      if (!v.is_string()) s.fail("'channels' entries must be qubit labels");
      m.channels.push_back(v.get<std::string>());
    }
  }
  const auto items = s.list("variants");
  if (items.empty()) s.fail("'variants' must not be empty");
  std::set<std::string> names;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Section v = s.item(items[i], i, "variants");
    MultiplexVariant mv;
    mv.name = v.text("name");
    if (!names.insert(mv.name).second) v.fail("duplicate variant name '" + mv.name + "'");
    auto& c = mv.config;
    c.filter = geometry_fields(v);
    c.initial_coupling = ff(v.positive("initial_coupling_ff", 5.0));
    c.align_filter = v.flag("align_filter", true);
    c.calibrate = v.flag("calibrate", true);
    const auto bands = v.list("bands");
    for (std::size_t b = 0; b < bands.size(); ++b) {
      Section bs = v.item(bands[b], b, "bands");
      multiplex::BandSpec band;
      band.label = bs.text("label");
      band.center = ghz(bs.positive("center_ghz"));
      band.span = mhz(bs.number("span_mhz", 200.0));
      band.count = bs.count("count", 4);
      band.target_linewidth = mhz(bs.number("target_linewidth_mhz", 0.0));
      bs.finish();
      c.bands.push_back(band);
    }
    const auto regimes = v.list("regimes");
    for (std::size_t r = 0; r < regimes.size(); ++r) {
      Section rs = v.item(regimes[r], r, "regimes");
      multiplex::RegimeSpec regime;
      regime.name = rs.text("name");
      regime.squid_inductance = nh(rs.positive("squid_inductance_nh"));
      regime.reads_band = rs.text("reads_band", "");
      rs.finish();
      c.regimes.push_back(regime);
    }
    v.finish();
    try {
      multiplex::validate(c);
    } catch (const ParameterError& e) {
      throw ConfigError(v.path() + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(v.path() + ": " + e.what());
    }
    if (!m.channels.empty() && m.channels.size() != c.bands.size()) {
      s.fail("'channels' needs one qubit label per band");
    }
    m.variants.push_back(std::move(mv));
  }
  s.finish();
  return m;
}

}  // namespace

RunConfig parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section root(j, "config");
  RunConfig c;
  if (root.has("device")) c.device = device_section(root.child("device"));
  if (root.has("sweep")) c.sweep = sweep_section(root.child("sweep"));
  if (root.has("readout")) c.readout = readout_section(root.child("readout"));
  if (root.has("leakage")) c.leakage = leakage_section(root.child("leakage"));
  if (root.has("multiplex")) c.multiplex = multiplex_section(root.child("multiplex"));
  root.finish();
  if (!c.device && !c.sweep && !c.readout && !c.leakage && !c.multiplex) {
    throw ConfigError("config: at least one of device, sweep, readout, leakage, multiplex is required");
  }
  if (c.multiplex && !c.multiplex->channels.empty()) {
    if (!c.device) throw ConfigError("config.multiplex.channels refers to qubits but there is no device section");
    for (const auto& label : c.multiplex->channels) find_qubit(*c.device, label);
  }
  return c;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void override_seeds(RunConfig& c, std::uint64_t seed) {
  if (c.readout) c.readout->seed = seed;
  if (c.leakage) c.leakage->seed = seed;
}

const readout::ReadoutChannel& find_qubit(const DeviceConfig& d, const std::string& label) {
  for (const auto& q : d.qubits) {
    if (q.label == label) return q;
  }
  throw ConfigError("unknown qubit '" + label + "'");
}

}  // namespace purcell::config
