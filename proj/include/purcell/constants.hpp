#pragma once

#include <numbers>

namespace purcell {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// CODATA exact values (SI 2019).
inline constexpr double kPlanck = 6.62607015e-34;
inline constexpr double kHbar = kPlanck / kTwoPi;
inline constexpr double kElementaryCharge = 1.602176634e-19;
inline constexpr double kFluxQuantum = kPlanck / (2.0 * kElementaryCharge);

// Unit helpers. Internally everything is SI; angular frequencies are rad/s.
inline constexpr double ghz(double v) { return v * 1e9; }
inline constexpr double mhz(double v) { return v * 1e6; }
inline constexpr double nh(double v) { return v * 1e-9; }
inline constexpr double ff(double v) { return v * 1e-15; }
inline constexpr double ns(double v) { return v * 1e-9; }
inline constexpr double us(double v) { return v * 1e-6; }

// Cyclic frequency (Hz) to angular frequency (rad/s) and back.
inline constexpr double angular(double hz) { return kTwoPi * hz; }
inline constexpr double cyclic(double rad_per_s) { return rad_per_s / kTwoPi; }

}  // namespace purcell
