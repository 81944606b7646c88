#include "purcell/leakage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "purcell/errors.hpp"
#include "purcell/levenberg_marquardt.hpp"
#include "purcell/rng.hpp"

namespace purcell::leakage {

namespace {

constexpr int kLeaked = 2;
using Vec3 = std::array<double, 3>;
using Joint = std::array<std::array<double, 2>, 3>;  // [state][bit]

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// P(outcome | state).
double read_probability(const LeakageChain& c, int state, int outcome) {
  double one = 0.0;
  switch (state) {
    case 0: one = c.error_0; break;
    case 1: one = 1.0 - c.error_1; break;
    default: one = c.leak_reads_one; break;
  }
  return outcome ? one : 1.0 - one;
}

Vec3 transition(const LeakageChain& c, const Vec3& p) {
  return {p[0] * (1.0 - c.leak_rate), p[1] * (1.0 - c.leak_rate) + p[2] * c.seep_rate,
          p[2] * (1.0 - c.seep_rate) + (p[0] + p[1]) * c.leak_rate};
}

Vec3 apply_initial_gate(const Distribution& d, InitialGate g) {
  switch (g) {
    case InitialGate::kXHalf: {
      const double half = 0.5 * (d.p0 + d.p1);
      return {half, half, d.leak};
    }
    case InitialGate::kX: return {d.p1, d.p0, d.leak};
    case InitialGate::kIdentity: break;
  }
  return {d.p0, d.p1, d.leak};
}

// Applies the transition and then the deterministic gate to each bit column.
Joint evolve(const LeakageChain& c, const Joint& j, bool swap) {
  Joint out{};
  for (int bit = 0; bit < 2; ++bit) {
    Vec3 col = transition(c, {j[0][bit], j[1][bit], j[2][bit]});
    if (swap) std::swap(col[0], col[1]);
    for (int s = 0; s < 3; ++s) out[s][bit] = col[s];
  }
  return out;
}

Joint measure(const LeakageChain& c, const Joint& j) {
  Joint out{};
  for (int s = 0; s < 3; ++s) {
    const double total = j[s][0] + j[s][1];
    for (int o = 0; o < 2; ++o) out[s][o] = total * read_probability(c, s, o);
  }
  return out;
}

Joint measure(const LeakageChain& c, const Vec3& p) {
  Joint out{};
  for (int s = 0; s < 3; ++s) {
    for (int o = 0; o < 2; ++o) out[s][o] = p[s] * read_probability(c, s, o);
  }
  return out;
}

inline double uniform(rng::Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

struct Shot {
  const LeakageChain& chain;
  rng::Engine& eng;
  int state = 0;

  int read() {
    double one;
    switch (state) {
      case 0: one = chain.error_0; break;
      case 1: one = 1.0 - chain.error_1; break;
      default: one = chain.leak_reads_one; break;
    }
    if (one >= 1.0) return 1;
    if (one <= 0.0) return 0;
    return uniform(eng) < one ? 1 : 0;
  }
  void transition() {
    if (state == kLeaked) {
      if (chain.seep_rate > 0.0 && uniform(eng) < chain.seep_rate) state = 1;
    } else if (chain.leak_rate > 0.0 && uniform(eng) < chain.leak_rate) {
      state = kLeaked;
    }
  }
  void flip() {
    if (state != kLeaked) state ^= 1;
  }
};

int draw_initial(const Vec3& p, rng::Engine& eng) {
  const double u = uniform(eng);
  if (u < p[0]) return 0;
  if (u < p[0] + p[1]) return 1;
  return kLeaked;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

void validate(const LeakageChain& c) {
  if (!is_probability(c.leak_rate) || !is_probability(c.seep_rate) || c.leak_rate + c.seep_rate > 1.0) {
    throw ParameterError("leak and seep rates must be probabilities with L_up + L_down <= 1");
  }
  if (!is_probability(c.error_0) || !is_probability(c.error_1) || !is_probability(c.leak_reads_one)) {
    throw ParameterError("readout error probabilities must lie in [0, 1]");
  }
  const auto& d = c.initial;
  if (!is_probability(d.p0) || !is_probability(d.p1) || !is_probability(d.leak) ||
      std::abs(d.p0 + d.p1 + d.leak - 1.0) > 1e-12) {
    throw ParameterError("initial distribution must sum to 1");
  }
}

void validate(const SequenceSchedule& s) {
  if (s.cycles < 2) throw ParameterError("a sequence needs at least two measurement cycles");
}

Distribution propagate_exact(const LeakageChain& chain, std::size_t m) {
  validate(chain);
  Vec3 p{chain.initial.p0, chain.initial.p1, chain.initial.leak};
  for (std::size_t k = 0; k < m; ++k) p = transition(chain, p);
  return {p[0], p[1], p[2]};
}

double computational_population(const LeakageChain& chain, std::size_t m) {
  validate(chain);
  const double l = chain.leak_rate + chain.seep_rate;
  const double p0 = chain.initial.computational();
  if (l == 0.0) return p0;
  const double b = chain.seep_rate / l;
  return (p0 - b) * std::pow(1.0 - l, static_cast<double>(m)) + b;
}

PiQndSeries exact_pi_qnd(const LeakageChain& chain, const SequenceSchedule& sched) {
  validate(chain);
  validate(sched);
  const bool swap = sched.interleave == Interleave::kXGate;
  if (sched.interleave == Interleave::kRandomBitFlip) throw ParameterError("pi-QND needs deterministic gates");
  PiQndSeries out;
  Joint j = evolve(chain, measure(chain, apply_initial_gate(chain.initial, sched.initial_gate)), swap);
  for (std::size_t m = 1; m < sched.cycles; ++m) {
    double pair[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [prev][next]
    for (int s = 0; s < 3; ++s) {
      for (int prev = 0; prev < 2; ++prev) {
        for (int next = 0; next < 2; ++next) pair[prev][next] += j[s][prev] * read_probability(chain, s, next);
      }
    }
    out.flip.push_back(pair[0][1] + pair[1][0]);
    const double ones = pair[1][0] + pair[1][1];
    const double zeros = pair[0][0] + pair[0][1];
    out.p0_given_1.push_back(ones > 0.0 ? pair[1][0] / ones : 0.0);
    out.p1_given_0.push_back(zeros > 0.0 ? pair[0][1] / zeros : 0.0);
    out.pairs.push_back(0);
    out.ones.push_back(0);
    out.zeros.push_back(0);
    j = evolve(chain, measure(chain, j), swap);
  }
  return out;
}

CorrelationSeries exact_random_circuit(const LeakageChain& chain, const SequenceSchedule& sched) {
  validate(chain);
  validate(sched);
  CorrelationSeries out;
  // Track (state, expected bit) where the expected bit is the previous outcome
  // XOR the flip applied after it; a random flip averages the two branches.
  auto after_gate = [&](const Joint& measured) {
    const Joint keep = evolve(chain, measured, false);
    const Joint flipped = evolve(chain, measured, true);
    Joint e{};
    for (int s = 0; s < 3; ++s) {
      for (int o = 0; o < 2; ++o) {
        e[s][o] += 0.5 * keep[s][o];
        e[s][1 - o] += 0.5 * flipped[s][o];
      }
    }
    return e;
  };
  Joint j = after_gate(measure(chain, apply_initial_gate(chain.initial, sched.initial_gate)));
  for (std::size_t m = 1; m < sched.cycles; ++m) {
    double c = 0.0;
    for (int s = 0; s < 3; ++s) {
      for (int e = 0; e < 2; ++e) c += j[s][e] * read_probability(chain, s, e);
    }
    out.mean.push_back(c);
    out.samples.push_back(0);
    j = after_gate(measure(chain, j));
  }
  return out;
}

PiQndSeries simulate_pi_qnd(const LeakageChain& chain, const SequenceSchedule& sched, std::size_t n_shots,
                            std::uint64_t seed) {
  validate(chain);
  validate(sched);
  if (sched.interleave == Interleave::kRandomBitFlip) throw ParameterError("pi-QND needs deterministic gates");
  if (n_shots == 0) throw ParameterError("need at least one shot");
  const bool swap = sched.interleave == Interleave::kXGate;
  const Vec3 start = apply_initial_gate(chain.initial, sched.initial_gate);
  const std::size_t pairs = sched.cycles - 1;
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n_shots + kBlock - 1) / kBlock;
  // Per block and pair index: flips, prev-one, one->zero, prev-zero, zero->one.
  std::vector<std::vector<std::uint32_t>> partial(blocks);

  rng::for_each_block(n_shots, kBlock, [&](std::size_t block, std::size_t begin, std::size_t end) {
    auto eng = rng::make_engine(seed, block);
    auto& acc = partial[block];
    acc.assign(pairs * 5, 0);
    for (std::size_t i = begin; i < end; ++i) {
      Shot shot{chain, eng, draw_initial(start, eng)};
      int prev = shot.read();
      shot.transition();
      if (swap) shot.flip();
      for (std::size_t k = 0; k < pairs; ++k) {
        const int next = shot.read();
        std::uint32_t* a = &acc[k * 5];
        a[0] += prev != next;
        if (prev) {
          ++a[1];
          a[2] += next == 0;
        } else {
          ++a[3];
          a[4] += next == 1;
        }
        prev = next;
        shot.transition();
        if (swap) shot.flip();
      }
    }
  });

  PiQndSeries out;
  out.low_statistics = n_shots < 100;
  for (std::size_t k = 0; k < pairs; ++k) {
    std::uint64_t a[5] = {0, 0, 0, 0, 0};
    for (const auto& p : partial) {
      for (int q = 0; q < 5; ++q) a[q] += p[k * 5 + static_cast<std::size_t>(q)];
    }
    const auto n = static_cast<double>(n_shots);
    out.flip.push_back(static_cast<double>(a[0]) / n);
    out.p0_given_1.push_back(a[1] ? static_cast<double>(a[2]) / static_cast<double>(a[1]) : 0.0);
    out.p1_given_0.push_back(a[3] ? static_cast<double>(a[4]) / static_cast<double>(a[3]) : 0.0);
    out.pairs.push_back(n_shots);
    out.ones.push_back(a[1]);
    out.zeros.push_back(a[3]);
  }
  return out;
}

CorrelationSeries simulate_random_circuit(const LeakageChain& chain, const SequenceSchedule& sched,
                                          std::size_t n_random, std::size_t n_shots, std::uint64_t seed) {
  validate(chain);
  validate(sched);
  if (sched.interleave != Interleave::kRandomBitFlip) throw ParameterError("random circuit needs random bit flips");
  if (n_random == 0 || n_shots == 0) throw ParameterError("need at least one randomization and one shot");
  const Vec3 start = apply_initial_gate(chain.initial, sched.initial_gate);
  const std::size_t pairs = sched.cycles - 1;
  const std::uint64_t flip_family = rng::stream_seed(seed, 0);
  const std::uint64_t shot_family = rng::stream_seed(seed, 1);
  std::vector<std::vector<std::uint32_t>> partial(n_random);

  rng::for_each_block(n_random, 1, [&](std::size_t k, std::size_t, std::size_t) {
    auto flip_eng = rng::make_engine(flip_family, k);
    std::vector<std::uint8_t> flips(sched.cycles);
    for (auto& f : flips) f = static_cast<std::uint8_t>(flip_eng() >> 63);
    auto eng = rng::make_engine(shot_family, k);
    auto& acc = partial[k];
    acc.assign(pairs, 0);
    for (std::size_t i = 0; i < n_shots; ++i) {
      Shot shot{chain, eng, draw_initial(start, eng)};
      int prev = shot.read();
      shot.transition();
      if (flips[0]) shot.flip();
      for (std::size_t m = 0; m < pairs; ++m) {
        const int next = shot.read();
        acc[m] += (prev ^ next) == flips[m];
        prev = next;
        shot.transition();
        if (flips[m + 1]) shot.flip();
      }
    }
  });

  CorrelationSeries out;
  const std::uint64_t total = static_cast<std::uint64_t>(n_random) * n_shots;
  for (std::size_t m = 0; m < pairs; ++m) {
    std::uint64_t hits = 0;
    for (const auto& p : partial) hits += p[m];
    out.mean.push_back(static_cast<double>(hits) / static_cast<double>(total));
    out.samples.push_back(total);
  }
  return out;
}

DecayFit fit_exponential(const std::vector<double>& y, const std::vector<std::uint64_t>& counts) {
  const std::size_t n = y.size();
  if (n < 4) throw ParameterError("decay fit needs at least 4 cycles");
  if (!counts.empty() && counts.size() != n) throw ParameterError("count vector length mismatch");
  for (double v : y) {
    if (!std::isfinite(v)) throw ParameterError("series contains non-finite values");
  }

  DecayFit fit;
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  if (*hi_it - *lo_it <= 1e-12) {
    fit.offset = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    fit.zero_rate = true;
    return fit;
  }

  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(nn), yy(nn), m(nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const auto k = static_cast<std::size_t>(i);
    yy[i] = y[k];
    m[i] = static_cast<double>(k + 1);
    if (!counts.empty() && counts[k] > 0) {
      const double c = static_cast<double>(counts[k]);
      const double p = (y[k] * c + 0.5) / (c + 1.0);
      w[i] = 1.0 / std::sqrt(p * (1.0 - p) / c);
    }
  }

  // Coarse scan over L with (A, B) solved linearly, then a joint refinement.
  auto linear_ab = [&](double l, double* cost) {
    Eigen::MatrixXd a(nn, 2);
    for (Eigen::Index i = 0; i < nn; ++i) {
      a(i, 0) = w[i] * std::pow(1.0 - l, m[i]);
      a(i, 1) = w[i];
    }
    const Eigen::VectorXd rhs = w.cwiseProduct(yy);
    const Eigen::Vector2d ab = a.colPivHouseholderQr().solve(rhs);
    *cost = (a * ab - rhs).squaredNorm();
    return ab;
  };
  double best_cost = INFINITY, best_l = 0.01;
  Eigen::Vector2d best_ab(0.0, 0.0);
  for (int k = 0; k <= 400; ++k) {
    const double l = std::pow(10.0, -7.0 + 7.0 * k / 400.0) * 0.999;
    double cost;
    const Eigen::Vector2d ab = linear_ab(l, &cost);
    if (cost < best_cost) best_cost = cost, best_l = l, best_ab = ab;
  }

  auto residuals = [&](const fit::Vector& q) {
    const double l = std::exp(q[2]);
    fit::Vector r(nn);
    for (Eigen::Index i = 0; i < nn; ++i) r[i] = w[i] * (q[0] * std::pow(1.0 - l, m[i]) + q[1] - yy[i]);
    return r;
  };
  auto jacobian = [&](const fit::Vector& q) {
    const double l = std::exp(q[2]);
    fit::Matrix j(nn, 3);
    for (Eigen::Index i = 0; i < nn; ++i) {
      const double d = std::pow(1.0 - l, m[i]);
      j(i, 0) = w[i] * d;
      j(i, 1) = w[i];
      j(i, 2) = w[i] * q[0] * m[i] * std::pow(1.0 - l, m[i] - 1.0) * (-l);
    }
    return j;
  };
  fit::Vector q0(3);
  q0 << best_ab[0], best_ab[1], std::log(best_l);
  fit::LmOptions opt;
  opt.max_iterations = 300;
  opt.cost_tolerance = 1e-18;
  opt.relative_step_tolerance = 1e-14;
  const auto res = fit::levenberg_marquardt(residuals, q0, opt, jacobian);
  fit.iterations = res.iterations;
  const double l = std::exp(res.params[2]);
  if (!res.converged || !res.params.allFinite()) throw FitError("decay fit did not converge", res.iterations);
  if (!(l >= 0.0 && l <= 1.0)) throw FitError("decay fit rejected: L outside [0, 1]", res.iterations);

  fit.amplitude = res.params[0];
  fit.offset = res.params[1];
  fit.rate_sum = l;
  const double dof = static_cast<double>(n > 3 ? n - 3 : 1);
  const Eigen::Matrix3d jac = Eigen::Vector3d(1.0, 1.0, l).asDiagonal();
  fit.covariance = jac * res.jtj_inverse * jac.transpose() * (res.cost / dof);
  fit.residual_rms = std::sqrt(residuals(res.params).cwiseQuotient(w).squaredNorm() / static_cast<double>(n));
  if (l < 1e-9 || std::abs(fit.amplitude) < 1e-12) fit.zero_rate = true;
  return fit;
}

DecayFit fit_pi_qnd(const PiQndSeries& series) {
  DecayFit fit = fit_exponential(series.flip, series.pairs);
  if (fit.zero_rate) return fit;
  const double b = fit.offset, l = fit.rate_sum;
  fit.leak = l * (1.0 - b);
  fit.seep = l * b;
  const Eigen::Vector3d g_leak(0.0, -l, 1.0 - b), g_seep(0.0, l, b);
  fit.leak_sigma = std::sqrt(std::max(0.0, g_leak.dot(fit.covariance * g_leak)));
  fit.seep_sigma = std::sqrt(std::max(0.0, g_seep.dot(fit.covariance * g_seep)));
  return fit;
}

double correlation_model(double a, double leak, double seep, double m) {
  const double l = leak + seep;
  if (l == 0.0) return a;
  return (leak * (a - 0.5) * std::pow(1.0 - l, m) + a * seep + 0.5 * leak) / l;
}

DecayFit fit_random_circuit(const CorrelationSeries& series) {
  DecayFit e = fit_exponential(series.mean, series.samples);
  if (e.zero_rate) {
    e.amplitude = e.offset;
    return e;
  }
  // (a, b, L) of a (1-L)^m + b  ->  (A, L_up, L_down) with A = a + b.
  const double a = e.amplitude, b = e.offset, l = e.rate_sum;
  const double big_a = a + b;
  const double den = big_a - 0.5;
  if (std::abs(den) < 1e-12) throw FitError("random-circuit amplitude is degenerate (A = 1/2)", e.iterations);
  DecayFit fit = e;
  fit.amplitude = big_a;
  fit.leak = a * l / den;
  fit.seep = l - fit.leak;
  Eigen::Matrix3d jac;
  jac.row(0) << 1.0, 1.0, 0.0;
  jac.row(1) << l / den - a * l / (den * den), -a * l / (den * den), a / den;
  jac.row(2) = Eigen::RowVector3d(0.0, 0.0, 1.0) - jac.row(1);
  fit.covariance = jac * e.covariance * jac.transpose();
  fit.leak_sigma = std::sqrt(std::max(0.0, fit.covariance(1, 1)));
  fit.seep_sigma = std::sqrt(std::max(0.0, fit.covariance(2, 2)));
  return fit;
}

namespace {

PlantedResult summarize(std::vector<DecayFit> repeats, DecayFit pooled) {
  PlantedResult out;
  std::vector<double> up, down;
  for (const auto& f : repeats) {
    up.push_back(f.leak);
    down.push_back(f.seep);
  }
  out.leak_sigma = sample_std(up);
  out.seep_sigma = sample_std(down);
  out.repeats = std::move(repeats);
  out.pooled = pooled;
  return out;
}

}  // namespace

PlantedResult planted_pi_qnd(const LeakageChain& chain, const SequenceSchedule& sched, std::size_t shots,
                             std::size_t repeats, std::uint64_t seed) {
  if (repeats == 0) throw ParameterError("need at least one repeat");
  std::vector<DecayFit> fits;
  PiQndSeries pooled;
  std::vector<double> flips;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto s = simulate_pi_qnd(chain, sched, shots, rng::stream_seed(seed, r));
    fits.push_back(fit_pi_qnd(s));
    if (r == 0) {
      pooled = s;
      flips.assign(s.flip.size(), 0.0);
      std::fill(pooled.pairs.begin(), pooled.pairs.end(), 0);
    }
    for (std::size_t k = 0; k < s.flip.size(); ++k) {
      flips[k] += std::round(s.flip[k] * static_cast<double>(s.pairs[k]));
      pooled.pairs[k] += s.pairs[k];
    }
  }
  for (std::size_t k = 0; k < flips.size(); ++k) pooled.flip[k] = flips[k] / static_cast<double>(pooled.pairs[k]);
  auto out = summarize(std::move(fits), fit_pi_qnd(pooled));
  out.pooled_series = pooled.flip;
  out.pooled_counts = pooled.pairs;
  return out;
}

PlantedResult planted_random_circuit(const LeakageChain& chain, const SequenceSchedule& sched,
                                     std::size_t n_random, std::size_t shots, std::size_t repeats,
                                     std::uint64_t seed) {
  if (repeats == 0) throw ParameterError("need at least one repeat");
  std::vector<DecayFit> fits;
  CorrelationSeries pooled;
  std::vector<double> hits;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto s = simulate_random_circuit(chain, sched, n_random, shots, rng::stream_seed(seed, r));
    fits.push_back(fit_random_circuit(s));
    if (r == 0) {
      pooled = s;
      hits.assign(s.mean.size(), 0.0);
      std::fill(pooled.samples.begin(), pooled.samples.end(), 0);
    }
    for (std::size_t k = 0; k < s.mean.size(); ++k) {
      hits[k] += std::round(s.mean[k] * static_cast<double>(s.samples[k]));
      pooled.samples[k] += s.samples[k];
    }
  }
  for (std::size_t k = 0; k < hits.size(); ++k) pooled.mean[k] = hits[k] / static_cast<double>(pooled.samples[k]);
  auto out = summarize(std::move(fits), fit_random_circuit(pooled));
  out.pooled_series = pooled.mean;
  out.pooled_counts = pooled.samples;
  return out;
}

}  // namespace purcell::leakage
