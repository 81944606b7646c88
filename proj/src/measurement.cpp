#include "purcell/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "purcell/errors.hpp"
#include "purcell/rng.hpp"

namespace purcell::measurement {

namespace {

constexpr std::size_t kBlock = 8192;

double separation_distance(double snr) { return std::sqrt(2.0 * snr); }

// P(N(x, 1) > threshold).
double upper_tail(double x, double threshold) { return 0.5 * std::erfc((threshold - x) / std::sqrt(2.0)); }

double decay_probability(double tau, double t1) {
  if (std::isinf(t1)) return 0.0;
  return -std::expm1(-tau / t1);
}

// Decay-time law of the excited signal: |1> -> |0> at 1/T1, optionally preceded
// by |2> -> |1> at ratio/T1.
struct DecayLaw {
  double t1;
  bool from_higher;
  double ratio;

  double cdf(double t) const {
    if (std::isinf(t1)) return 0.0;
    const double b = 1.0 / t1;
    if (!from_higher) return -std::expm1(-b * t);
    const double a = ratio / t1;
    if (std::abs(a - b) < 1e-12 * b) return 1.0 - std::exp(-b * t) * (1.0 + b * t);
    return 1.0 - (b * std::exp(-a * t) - a * std::exp(-b * t)) / (b - a);
  }
  double pdf(double t) const {
    if (std::isinf(t1)) return 0.0;
    const double b = 1.0 / t1;
    if (!from_higher) return b * std::exp(-b * t);
    const double a = ratio / t1;
    if (std::abs(a - b) < 1e-12 * b) return b * b * t * std::exp(-b * t);
    return a * b / (b - a) * (std::exp(-a * t) - std::exp(-b * t));
  }
};

// P(assigned 0 | excited preparation) for the given decay law.
double excited_error(const ReadoutPulseSpec& spec, const DecayLaw& law) {
  const double d = separation_distance(spec.snr);
  const double tau = spec.demod_length;
  const double eps = 1.0 - upper_tail(d, 0.5 * d);
  const double p = law.cdf(tau);
  if (spec.relaxation == RelaxationModel::kWindowFlip) return (1.0 - p) * eps + p * (1.0 - upper_tail(0.0, 0.5 * d));
  // Composite Simpson over the decay time inside the window.
  const int n = 4000;
  const double h = tau / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * law.pdf(t) * (1.0 - upper_tail(d * t / tau, 0.5 * d));
  }
  return (1.0 - p) * eps + acc * h / 3.0;
}

double sample_decay_time(rng::Engine& eng, const DecayLaw& law) {
  if (std::isinf(law.t1)) return std::numeric_limits<double>::infinity();
  std::exponential_distribution<double> one(1.0 / law.t1);
  double t = one(eng);
  if (law.from_higher) {
    std::exponential_distribution<double> two(law.ratio / law.t1);
    t += two(eng);
  }
  return t;
}

// Signal mean along the qubit axis (in units of d) for a decay at time t.
double signal_fraction(const ReadoutPulseSpec& spec, double t) {
  if (t >= spec.demod_length) return 1.0;
  if (spec.relaxation == RelaxationModel::kWindowFlip) return 0.0;
  return t / spec.demod_length;
}

}  // namespace

void validate(const ReadoutPulseSpec& s) {
  auto positive = [&](double v, const char* what) {
    if (!(v > 0.0) || std::isnan(v)) throw ParameterError(s.label + ": " + what + " must be positive");
  };
  positive(s.pulse_length, "pulse length");
  positive(s.demod_length, "demodulation length");
  positive(s.total_length, "total measurement length");
  positive(s.t1_readout, "T1 during readout");
  if (s.demod_length > s.total_length) throw ParameterError(s.label + ": demodulation exceeds measurement length");
  if (s.pulse_length > s.total_length) throw ParameterError(s.label + ": pulse exceeds measurement length");
  if (!(s.snr >= 0.0) || !std::isfinite(s.snr)) throw ParameterError(s.label + ": SNR must be >= 0");
  if (s.photons_ground < 0.0 || s.photons_excited < 0.0) throw ParameterError(s.label + ": negative photon number");
}

double Discriminator::project(std::complex<double> iq) const {
  const std::complex<double> axis = mu1 - mu0;
  const double len2 = std::norm(axis);
  const std::complex<double> dir = len2 > 0.0 ? axis / std::sqrt(len2) : std::complex<double>(1.0, 0.0);
  const std::complex<double> mid = 0.5 * (mu0 + mu1);
  return std::real((iq - mid) * std::conj(dir));
}

std::uint8_t Discriminator::assign(std::complex<double> iq) const { return project(iq) > 0.0 ? 1 : 0; }

std::complex<double> ground_mean(const ReadoutPulseSpec&) { return {0.0, 0.0}; }
std::complex<double> excited_mean(const ReadoutPulseSpec& spec) { return {separation_distance(spec.snr), 0.0}; }
Discriminator ideal_discriminator(const ReadoutPulseSpec& spec) { return {ground_mean(spec), excited_mean(spec)}; }

Discriminator fit_discriminator(std::span<const ShotRecord> g, std::span<const ShotRecord> e) {
  if (g.empty() || e.empty()) throw ParameterError("discriminator needs shots of both preparations");
  std::complex<double> sg{}, se{};
  for (const auto& s : g) sg += s.iq;
  for (const auto& s : e) se += s.iq;
  return {sg / static_cast<double>(g.size()), se / static_cast<double>(e.size())};
}

std::vector<ShotRecord> simulate_shots(const ReadoutPulseSpec& spec, State prepared, std::size_t n_shots,
                                       std::uint64_t seed, double higher_decay_ratio) {
  validate(spec);
  if (n_shots < 1) throw ParameterError("need at least one shot");
  if (!(higher_decay_ratio > 0.0)) throw ParameterError("|2> decay ratio must be positive");
  const double d = separation_distance(spec.snr);
  const Discriminator disc = ideal_discriminator(spec);
  const DecayLaw law{spec.t1_readout, prepared == State::kHigher, higher_decay_ratio};
  // Ground and excited draws use separate substream families. Promotion to |2>
  // shares the excited family, so without decay it reproduces the plain shots.
  const std::uint64_t family = rng::stream_seed(seed, prepared == State::kGround ? 0 : 1);

  std::vector<ShotRecord> shots(n_shots);
  rng::for_each_block(n_shots, kBlock, [&](std::size_t block, std::size_t begin, std::size_t end) {
    auto eng = rng::make_engine(family, block);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
      double x = 0.0;
      if (prepared != State::kGround) x = d * signal_fraction(spec, sample_decay_time(eng, law));
      const double re = x + noise(eng);
      const double im = noise(eng);
      auto& s = shots[i];
      s.iq = {re, im};
      s.prepared = prepared;
      s.assigned = disc.assign(s.iq);
    }
  });
  return shots;
}

double fidelity(std::span<const ShotRecord> g, std::span<const ShotRecord> e, const Discriminator& disc) {
  if (g.empty() || e.empty()) throw ParameterError("fidelity needs shots of both preparations");
  std::size_t g0 = 0, e1 = 0;
  for (const auto& s : g) g0 += disc.assign(s.iq) == 0;
  for (const auto& s : e) e1 += disc.assign(s.iq) == 1;
  return 0.5 * (static_cast<double>(g0) / static_cast<double>(g.size()) +
                static_cast<double>(e1) / static_cast<double>(e.size()));
}

double separation_error(double snr) {
  if (!(snr >= 0.0)) throw ParameterError("SNR must be >= 0");
  return 0.5 * std::erfc(std::sqrt(snr) / 2.0);
}

double snr_for_separation_error(double error) {
  if (!(error > 0.0 && error <= 0.5)) throw ParameterError("separation error must lie in (0, 0.5]");
  // Bisection on x = sqrt(snr) / 2.
  double lo = 0.0, hi = 1.0;
  while (0.5 * std::erfc(hi) > error) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(mid) > error ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  return 4.0 * x * x;
}

double relaxation_error(double demod_length, double t1) {
  if (!(demod_length >= 0.0)) throw ParameterError("demodulation length must be >= 0");
  if (!(t1 > 0.0)) throw ParameterError("T1 must be positive");
  return 0.5 * decay_probability(demod_length, t1);
}

double expected_fidelity(const ReadoutPulseSpec& spec) {
  validate(spec);
  const double eps_g = separation_error(spec.snr);
  const double eps_e = excited_error(spec, {spec.t1_readout, false, 1.0});
  return 1.0 - 0.5 * (eps_g + eps_e);
}

double snr_for_fidelity(double target, double demod_length, double t1) {
  const double p = decay_probability(demod_length, t1);
  const double eps = ((1.0 - target) - 0.5 * p) / (1.0 - p);
  if (!(eps > 0.0 && eps <= 0.5)) throw ParameterError("target fidelity is not reachable with this relaxation");
  return snr_for_separation_error(eps);
}

ErrorBudget error_budget(const ReadoutPulseSpec& spec, double measured_fidelity) {
  ErrorBudget b;
  b.readout_error = 1.0 - measured_fidelity;
  b.relaxation_error = relaxation_error(spec.demod_length, spec.t1_readout);
  b.separation_error = separation_error(spec.snr);
  b.residual = b.readout_error - b.relaxation_error - b.separation_error;
  return b;
}

std::vector<HistogramBin> histogram(std::span<const ShotRecord> g, std::span<const ShotRecord> e,
                                    const Discriminator& disc, std::size_t bins) {
  if (bins == 0) throw ParameterError("histogram needs at least one bin");
  const double scale = std::abs(disc.mu1 - disc.mu0);
  auto coord = [&](const ShotRecord& s) { return scale > 0.0 ? disc.project(s.iq) / scale + 0.5 : disc.project(s.iq); };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : g) lo = std::min(lo, coord(s)), hi = std::max(hi, coord(s));
  for (const auto& s : e) lo = std::min(lo, coord(s)), hi = std::max(hi, coord(s));
  if (!(hi > lo)) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t k = 0; k < bins; ++k) out[k] = {lo + (static_cast<double>(k) + 0.5) * width, 0, 0};
  auto index = [&](double x) { return std::min(bins - 1, static_cast<std::size_t>((x - lo) / width)); };
  for (const auto& s : g) ++out[index(coord(s))].count_g;
  for (const auto& s : e) ++out[index(coord(s))].count_e;
  return out;
}

double AssignmentMatrix::row_sum(std::size_t prepared) const {
  double s = 0.0;
  for (std::size_t a = 0; a < dim(); ++a) s += at(prepared, a);
  return s;
}

double AssignmentMatrix::qubit_fidelity(std::size_t q) const {
  if (q >= qubits) throw ParameterError("qubit index out of range");
  double correct = 0.0;
  for (std::size_t p = 0; p < dim(); ++p) {
    for (std::size_t a = 0; a < dim(); ++a) {
      if (((p >> q) & 1U) == ((a >> q) & 1U)) correct += at(p, a);
    }
  }
  return correct / static_cast<double>(dim());
}

double AssignmentMatrix::cross_fidelity(std::size_t i, std::size_t j) const {
  if (i >= qubits || j >= qubits) throw ParameterError("qubit index out of range");
  double one_given_one = 0.0, zero_given_zero = 0.0;
  for (std::size_t p = 0; p < dim(); ++p) {
    for (std::size_t a = 0; a < dim(); ++a) {
      const bool sj = (p >> j) & 1U;
      const bool ai = (a >> i) & 1U;
      if (sj && ai) one_given_one += at(p, a);
      if (!sj && !ai) zero_given_zero += at(p, a);
    }
  }
  const double half = static_cast<double>(dim()) / 2.0;
  return 1.0 - (one_given_one + zero_given_zero) / half;
}

AssignmentMatrix multiplexed_assignment(std::span<const ReadoutPulseSpec> specs,
                                        const std::vector<std::vector<double>>& crosstalk, std::size_t n_shots,
                                        std::uint64_t seed) {
  const std::size_t n = specs.size();
  if (n == 0 || n > 12) throw ParameterError("multiplexed readout needs 1..12 qubits");
  if (crosstalk.size() != n) throw ParameterError("crosstalk matrix must be N x N");
  for (std::size_t j = 0; j < n; ++j) {
    if (crosstalk[j].size() != n) throw ParameterError("crosstalk matrix must be N x N");
    if (crosstalk[j][j] != 0.0) throw ParameterError("crosstalk diagonal must be zero");
    for (double c : crosstalk[j]) {
      if (!(c >= 0.0) || !std::isfinite(c)) throw ParameterError("crosstalk entries must be >= 0");
    }
  }
  for (const auto& s : specs) validate(s);
  if (n_shots < 1) throw ParameterError("need at least one shot");

  AssignmentMatrix m;
  m.qubits = n;
  const std::size_t dim = m.dim();
  const std::size_t total = dim * n_shots;
  const std::size_t blocks = (total + kBlock - 1) / kBlock;
  std::vector<std::vector<std::uint32_t>> partial(blocks);

  rng::for_each_block(total, kBlock, [&](std::size_t block, std::size_t begin, std::size_t end) {
    auto eng = rng::make_engine(seed, block);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto& counts = partial[block];
    counts.assign(dim * dim, 0);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t prep = k / n_shots;
      std::size_t outcome = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const auto& spec = specs[j];
        const double d = separation_distance(spec.snr);
        const bool excited = (prep >> j) & 1U;
        double x = 0.0;
        if (excited) x = d * signal_fraction(spec, sample_decay_time(eng, {spec.t1_readout, false, 1.0}));
        double shift = 0.0;
        for (std::size_t q = 0; q < n; ++q) shift += crosstalk[j][q] * static_cast<double>((prep >> q) & 1U);
        x += shift * d;
        const double re = x + noise(eng);
        const double im = noise(eng);
        if (ideal_discriminator(spec).assign({re, im})) outcome |= std::size_t{1} << j;
      }
      ++counts[prep * dim + outcome];
    }
  });

  std::vector<std::uint64_t> counts(dim * dim, 0);
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < p.size(); ++k) counts[k] += p[k];
  }
  m.entries.resize(dim * dim);
  for (std::size_t p = 0; p < dim; ++p) {
    std::uint64_t row = 0;
    for (std::size_t a = 0; a < dim; ++a) row += counts[p * dim + a];
    for (std::size_t a = 0; a < dim; ++a) {
      m.entries[p * dim + a] = static_cast<double>(counts[p * dim + a]) / static_cast<double>(row);
    }
  }
  return m;
}

double pair_cross_fidelity(const ReadoutPulseSpec& spec, double c) {
  const double d = separation_distance(spec.snr);
  const double p = decay_probability(spec.demod_length, spec.t1_readout);
  auto one_given = [&](double sj) {
    const double shift = c * sj * d;
    const double from_ground = upper_tail(shift, 0.5 * d);
    const double from_excited = (1.0 - p) * upper_tail(d + shift, 0.5 * d) + p * upper_tail(shift, 0.5 * d);
    return 0.5 * (from_ground + from_excited);
  };
  return one_given(0.0) - one_given(1.0);
}

double coupling_for_cross_fidelity(const ReadoutPulseSpec& spec, double target) {
  if (!(target > 0.0 && target < 0.5)) throw ParameterError("target cross-fidelity must lie in (0, 0.5)");
  double lo = 0.0, hi = 1.0;
  if (std::abs(pair_cross_fidelity(spec, hi)) < target) throw NotFoundError("cross-fidelity target not reachable");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(pair_cross_fidelity(spec, mid)) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

MultilevelResult multilevel_fidelity(const ReadoutPulseSpec& spec, bool promote, std::size_t n_shots,
                                     std::uint64_t seed, double higher_decay_ratio) {
  const auto g = simulate_shots(spec, State::kGround, n_shots, seed);
  const auto e = simulate_shots(spec, promote ? State::kHigher : State::kExcited, n_shots, seed, higher_decay_ratio);
  MultilevelResult r;
  r.fidelity = fidelity(g, e, ideal_discriminator(spec));
  const DecayLaw law{spec.t1_readout, promote, higher_decay_ratio};
  r.expected = 1.0 - 0.5 * (separation_error(spec.snr) + excited_error(spec, law));
  return r;
}

}  // namespace purcell::measurement
