#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "iontrap/error.hpp"

namespace iontrap {

/// Real control field E(t_i), t_i = i * dt, over one pulse. Atomic units.
struct ControlField {
  std::vector<double> samples;
  double dt = 0.0;

  std::size_t intervals() const { return samples.empty() ? 0 : samples.size() - 1; }
  double t_pulse() const { return dt * static_cast<double>(intervals()); }
  double time(std::size_t i) const { return dt * static_cast<double>(i); }

  /// Piecewise-linear value at an arbitrary time within the pulse.
  double at(double t) const {
    if (samples.empty()) return 0.0;
    if (t <= 0.0) return samples.front();
    const double x = t / dt;
    const auto i = static_cast<std::size_t>(x);
    if (i >= intervals()) return samples.back();
    const double f = x - static_cast<double>(i);
    return (1.0 - f) * samples[i] + f * samples[i + 1];
  }

  double peak() const {
    double m = 0.0;
    for (double e : samples) m = std::max(m, std::abs(e));
    return m;
  }

  /// Trapezoidal integral of E^2.
  double fluence() const {
    if (samples.size() < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double w = (i == 0 || i + 1 == samples.size()) ? 0.5 : 1.0;
      s += w * samples[i] * samples[i];
    }
    return s * dt;
  }

  void validate() const {
    if (samples.size() < 2) throw ConfigError("ControlField: need at least two samples");
    if (!(dt > 0.0)) throw ConfigError("ControlField: dt must be positive");
    for (double e : samples) {
      if (!std::isfinite(e)) throw NumericalError("ControlField: non-finite sample");
    }
  }

  static ControlField zeros(double t_pulse, double dt) {
    const double steps = t_pulse / dt;
    const auto n = static_cast<std::size_t>(std::llround(steps));
    if (n == 0 || std::abs(steps - static_cast<double>(n)) > 1e-6 * steps) {
      throw ConfigError("ControlField: t_pulse must be a positive multiple of dt");
    }
    return ControlField{std::vector<double>(n + 1, 0.0), t_pulse / static_cast<double>(n)};
  }
};

}  // namespace iontrap
