#include "purcell/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "purcell/errors.hpp"
#include "purcell/levenberg_marquardt.hpp"

namespace purcell::network {

double lorentzian_power(double f, double center, double fwhm, double amplitude, double background) {
  const double u = 2.0 * (f - center) / fwhm;
  return amplitude / (1.0 + u * u) + background;
}

namespace {

struct PowerTrace {
  std::vector<double> f;
  std::vector<double> p;
};

PowerTrace select(std::span<const SweepSample> spectrum, FrequencyWindow window) {
  PowerTrace t;
  for (const auto& s : spectrum) {
    if (!s.valid || s.frequency < window.lo || s.frequency > window.hi) continue;
    t.f.push_back(s.frequency);
    t.p.push_back(std::norm(s.s21));
  }
  return t;
}

// Index of the strongest sample; ties resolve to the lowest frequency.
std::size_t argmax_lowest(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

// Full width at half maximum from linear interpolation of the half-level crossings.
double half_max_width(const std::vector<double>& f, const std::vector<double>& p, std::size_t peak, double floor) {
  const double half = floor + 0.5 * (p[peak] - floor);
  std::size_t l = peak, r = peak;
  while (l > 0 && p[l] > half) --l;
  while (r + 1 < p.size() && p[r] > half) ++r;
  auto cross = [&](std::size_t a, std::size_t b) {
    if (p[a] == p[b]) return f[a];
    return f[a] + (half - p[a]) * (f[b] - f[a]) / (p[b] - p[a]);
  };
  const double fl = (p[l] <= half && l < peak) ? cross(l, l + 1) : f[l];
  const double fr = (p[r] <= half && r > peak) ? cross(r - 1, r) : f[r];
  const double step = f.size() > 1 ? (f.back() - f.front()) / static_cast<double>(f.size() - 1) : 1.0;
  return std::max(fr - fl, step);
}

}  // namespace

ResonancePeak extract_resonance(std::span<const SweepSample> spectrum, FrequencyWindow window) {
  const PowerTrace t = select(spectrum, window);
  if (t.f.size() < 20) {
    throw ParameterError("resonance window holds " + std::to_string(t.f.size()) + " samples, need >= 20");
  }
  const std::size_t peak = argmax_lowest(t.p);
  if (peak == 0 || peak + 1 == t.p.size()) {
    throw NotFoundError("no local maximum of |S21| inside the window");
  }

  const double pmax = t.p[peak];
  if (!(pmax > 0.0)) throw NotFoundError("|S21| vanishes across the window");
  const double floor = *std::min_element(t.p.begin(), t.p.end());
  const double width0 = half_max_width(t.f, t.p, peak, floor);
  const double f_ref = t.f[peak];

  // Work in normalized units: frequency offset in initial linewidths, power in pmax.
  const auto n = static_cast<Eigen::Index>(t.f.size());
  fit::Vector x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = (t.f[i] - f_ref) / width0;
    y[i] = t.p[i] / pmax;
  }
  auto residuals = [&](const fit::Vector& q) {
    fit::Vector r(n);
    for (Eigen::Index i = 0; i < n; ++i) r[i] = lorentzian_power(x[i], q[0], q[1], q[2], q[3]) - y[i];
    return r;
  };
  auto jacobian = [&](const fit::Vector& q) {
    fit::Matrix j(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = 2.0 * (x[i] - q[0]) / q[1];
      const double d = 1.0 + u * u;
      j(i, 0) = 4.0 * q[2] * u / (q[1] * d * d);
      j(i, 1) = 2.0 * q[2] * u * u / (q[1] * d * d);
      j(i, 2) = 1.0 / d;
      j(i, 3) = 1.0;
    }
    return j;
  };

  fit::Vector q0(4);
  q0 << 0.0, 1.0, 1.0 - floor / pmax, floor / pmax;
  fit::LmOptions options;
  options.max_iterations = 200;
  const auto res = fit::levenberg_marquardt(residuals, q0, options, jacobian);

  const double center = f_ref + res.params[0] * width0;
  const double fwhm = std::abs(res.params[1]) * width0;
  const double amp = res.params[2] * pmax;
  const double bg = res.params[3] * pmax;
  if (!res.converged || !res.params.allFinite() || !(fwhm > 0.0) || !(amp > 0.0) || center < window.lo ||
      center > window.hi) {
    throw FitError("Lorentzian fit diverged", res.iterations);
  }

  ResonancePeak out;
  out.center_frequency = center;
  out.linewidth_fwhm = fwhm;
  out.peak_magnitude = std::sqrt(std::max(amp + bg, 0.0));
  out.fit_residual = std::sqrt(res.cost / static_cast<double>(n)) * pmax;
  out.iterations = res.iterations;
  return out;
}

ResonancePeak locate_resonance(const CircuitNetwork& net, FrequencyWindow search, const LocateOptions& options) {
  auto grid = linear_grid(search.lo, search.hi, options.coarse_points);
  auto sweep = s21_sweep(net, grid);

  std::vector<double> f, p;
  for (const auto& s : sweep) {
    if (!s.valid) continue;
    f.push_back(s.frequency);
    p.push_back(std::norm(s.s21));
  }
  if (f.size() < 3) throw NotFoundError("search window has no valid samples");
  std::size_t peak = argmax_lowest(p);
  if (peak == 0 || peak + 1 == p.size()) throw NotFoundError("strongest response sits at the search edge");

  double center = f[peak];
  double width = half_max_width(f, p, peak, *std::min_element(p.begin(), p.end()));
  FrequencyWindow window{};
  for (std::size_t k = 0; k <= options.refinements; ++k) {
    const double half = 0.5 * options.window_in_linewidths * width;
    window = {std::max(search.lo, center - half), std::min(search.hi, center + half)};
    grid = linear_grid(window.lo, window.hi, options.fine_points);
    sweep = s21_sweep(net, grid);
    f.clear();
    p.clear();
    for (const auto& s : sweep) {
      if (!s.valid) continue;
      f.push_back(s.frequency);
      p.push_back(std::norm(s.s21));
    }
    peak = argmax_lowest(p);
    if (peak == 0 || peak + 1 == p.size()) break;
    const double next = half_max_width(f, p, peak, *std::min_element(p.begin(), p.end()));
    const bool settled = std::abs(next - width) < 0.02 * width && std::abs(f[peak] - center) < 0.05 * width;
    center = f[peak];
    width = next;
    if (settled) break;
  }
  const double half = 0.5 * options.window_in_linewidths * width;
  window = {std::max(search.lo, center - half), std::min(search.hi, center + half)};
  grid = linear_grid(window.lo, window.hi, options.fine_points);
  sweep = s21_sweep(net, grid);
  return extract_resonance(sweep, window);
}

}  // namespace purcell::network
