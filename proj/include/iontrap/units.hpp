#pragma once

// Atomic-unit conversions (CODATA 2018). Everything inside the library is in
// atomic units; these helpers are only used at I/O boundaries.

#include <numbers>

namespace iontrap::units {

inline constexpr double kTimeSeconds = 2.4188843265857e-17;   // 1 a.u. of time
inline constexpr double kFieldVoltPerMeter = 5.14220675e11;   // 1 a.u. of field
inline constexpr double kLengthMeters = 5.29177210903e-11;    // bohr
inline constexpr double kDaltonInElectronMasses = 1822.888486;

inline constexpr double seconds_to_au(double s) { return s / kTimeSeconds; }
inline constexpr double au_to_seconds(double t) { return t * kTimeSeconds; }
inline constexpr double us_to_au(double us) { return seconds_to_au(us * 1e-6); }
inline constexpr double ns_to_au(double ns) { return seconds_to_au(ns * 1e-9); }
inline constexpr double ps_to_au(double ps) { return seconds_to_au(ps * 1e-12); }
inline constexpr double ms_to_au(double ms) { return seconds_to_au(ms * 1e-3); }

inline constexpr double vpm_to_au(double v) { return v / kFieldVoltPerMeter; }
inline constexpr double au_to_vpm(double e) { return e * kFieldVoltPerMeter; }

inline constexpr double au_to_nm(double z) { return z * kLengthMeters * 1e9; }

/// Angular frequency (a.u.) to ordinary frequency in Hz.
inline constexpr double angular_au_to_hz(double w) {
  return w / (2.0 * std::numbers::pi) / kTimeSeconds;
}
inline constexpr double hz_to_angular_au(double hz) {
  return hz * 2.0 * std::numbers::pi * kTimeSeconds;
}

}  // namespace iontrap::units
