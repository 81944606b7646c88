#pragma once

#include <cstddef>
#include <span>

#include "purcell/network.hpp"

namespace purcell::network {

/// Fitted Lorentzian resonance in |S21|^2.
struct ResonancePeak {
  double center_frequency = 0.0;  // Hz
  double linewidth_fwhm = 0.0;    // Hz
  double peak_magnitude = 0.0;    // |S21| at the fitted center
  double fit_residual = 0.0;      // RMS of (|S21|^2 data - model)
  std::size_t iterations = 0;
};

struct FrequencyWindow {
  double lo;
  double hi;
};

/// Magnitude-squared Lorentzian with constant background.
double lorentzian_power(double f, double center, double fwhm, double amplitude, double background);

/// Fits the single peak of |S21|^2 inside `window`. Samples flagged invalid are
/// ignored. Throws NotFoundError when the window has no interior maximum and
/// FitError when the least-squares fit diverges.
ResonancePeak extract_resonance(std::span<const SweepSample> spectrum, FrequencyWindow window);

struct LocateOptions {
  std::size_t coarse_points = 4001;
  std::size_t fine_points = 2001;
  double window_in_linewidths = 10.0;  // full width of the refined window
  std::size_t refinements = 4;
};

/// Coarse sweep over `search`, then repeated zoom on the strongest peak until the
/// window spans `window_in_linewidths` of its own linewidth; fits the last window.
ResonancePeak locate_resonance(const CircuitNetwork& net, FrequencyWindow search, const LocateOptions& options = {});

}  // namespace purcell::network
