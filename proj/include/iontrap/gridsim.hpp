#pragma once

// The simulated one-particle system: spatial grid, Gaussian wave packets, the
// split-operator step and the elementary evolution operator U_s(Delta t).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "iontrap/error.hpp"
#include "iontrap/fft.hpp"

namespace iontrap {

using cplx = std::complex<double>;

/// Uniform grid with x_j = x_min + (j + 1) dx; x_min itself is not a point.
struct Grid {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t n = 0;
  double delta_x = 0.0;
  std::vector<double> points;

  bool power_of_two() const { return n != 0 && (n & (n - 1)) == 0; }
};

inline Grid make_grid(double x_min, double x_max, std::size_t n) {
  if (!(x_min < x_max)) throw ConfigError("make_grid: x_min must be below x_max");
  if (n < 2) throw ConfigError("make_grid: need at least two points");
  Grid g{x_min, x_max, n, (x_max - x_min) / static_cast<double>(n), {}};
  g.points.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    g.points[j] = x_min + static_cast<double>(j + 1) * g.delta_x;
  }
  g.points.back() = x_max;
  if (!g.power_of_two()) {
    diag::warn("make_grid: N=" + std::to_string(n) + " is not a power of two");
  }
  return g;
}

struct SimSystem {
  double mass = 1.0;
  std::function<double(double)> potential;
  std::string label;
  /// Set when the potential is m w^2 x^2 / 2; enables the analytic oracle.
  std::optional<double> harmonic_omega;

  static SimSystem harmonic(double mass = 1.0, double omega = 1.0) {
    SimSystem s;
    s.mass = mass;
    s.harmonic_omega = omega;
    s.potential = [mass, omega](double x) { return 0.5 * mass * omega * omega * x * x; };
    s.label = "harmonic(m=" + std::to_string(mass) + ",w=" + std::to_string(omega) + ")";
    return s;
  }

  static SimSystem free_particle(double mass = 1.0) {
    SimSystem s;
    s.mass = mass;
    s.potential = [](double) { return 0.0; };
    s.label = "free(m=" + std::to_string(mass) + ")";
    return s;
  }
};

struct GridWavepacket {
  Grid grid;
  std::vector<cplx> amplitudes;

  double norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s * grid.delta_x;
  }

  /// |psi(x_j)|^2
  std::vector<double> density() const {
    std::vector<double> out(amplitudes.size());
    for (std::size_t j = 0; j < amplitudes.size(); ++j) out[j] = std::norm(amplitudes[j]);
    return out;
  }

  /// Grid-point probabilities |psi(x_j)|^2 dx, the register populations.
  std::vector<double> probabilities() const {
    std::vector<double> out = density();
    for (double& p : out) p *= grid.delta_x;
    return out;
  }
};

/// (sigma/pi)^{1/4} exp[-(x - x0)^2 / (2 sigma)] sampled on the grid and
/// renormalized so that sum |psi|^2 dx = 1.
inline GridWavepacket gaussian_packet(const Grid& grid, double sigma, double x0) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian_packet: sigma must be positive");
  GridWavepacket psi{grid, std::vector<cplx>(grid.n)};
  const double pref = std::pow(sigma / std::numbers::pi, 0.25);
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double d = grid.points[j] - x0;
    psi.amplitudes[j] = pref * std::exp(-d * d / (2.0 * sigma));
  }
  const double scale = 1.0 / std::sqrt(psi.norm());
  for (auto& a : psi.amplitudes) a *= scale;
  const double edge = std::max(std::norm(psi.amplitudes.front()), std::norm(psi.amplitudes.back())) *
                      grid.delta_x;
  if (edge > 1e-6) {
    diag::warn("gaussian_packet: boundary weight " + std::to_string(edge) +
               " exceeds 1e-6; packet leaks off the grid");
  }
  return psi;
}

/// Strang-split short-time propagator
/// exp(-iV dt/2) F^-1 exp(-iT dt) F exp(-iV dt/2) on a fixed grid.
class SplitOperator {
 public:
  SplitOperator(const SimSystem& system, const Grid& grid, double dt)
      : n_(grid.n), fft_(grid.n), half_potential_(grid.n), kinetic_(grid.n) {
    if (!system.potential) throw ConfigError("SplitOperator: system has no potential");
    if (!(system.mass > 0.0)) throw ConfigError("SplitOperator: mass must be positive");
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = system.potential(grid.points[j]);
      if (!std::isfinite(v)) throw ConfigError("SplitOperator: potential is not finite on the grid");
      half_potential_[j] = std::polar(1.0, -0.5 * v * dt);
    }
    const double dk = 2.0 * std::numbers::pi / (static_cast<double>(n_) * grid.delta_x);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t m = 0; m < n_; ++m) {
      const double k = momentum_index(m) * dk;
      // Fold the 1/N of the inverse transform into the kinetic factor.
      kinetic_[m] = inv_n * std::polar(1.0, -k * k * dt / (2.0 * system.mass));
    }
  }

  /// Signed DFT index of bin m: 0..N/2, then negative.
  double momentum_index(std::size_t m) const {
    return m <= n_ / 2 ? static_cast<double>(m)
                       : static_cast<double>(m) - static_cast<double>(n_);
  }

  void apply(std::vector<cplx>& psi) {
    if (psi.size() != n_) throw ConfigError("SplitOperator: size mismatch");
    for (std::size_t j = 0; j < n_; ++j) psi[j] *= half_potential_[j];
    fft_.forward(psi);
    for (std::size_t m = 0; m < n_; ++m) psi[m] *= kinetic_[m];
    fft_.backward(psi);
    for (std::size_t j = 0; j < n_; ++j) psi[j] *= half_potential_[j];
  }

 private:
  std::size_t n_;
  FftPlan fft_;
  std::vector<cplx> half_potential_;
  std::vector<cplx> kinetic_;
};

inline GridWavepacket split_step(const GridWavepacket& psi, const SimSystem& system, double dt) {
  if (!(dt > 0.0)) throw ConfigError("split_step: dt must be positive");
  SplitOperator op(system, psi.grid, dt);
  GridWavepacket out = psi;
  op.apply(out.amplitudes);
  return out;
}

/// N x N unitary in the qubit-amplitude convention c_j = psi(x_j) sqrt(dx).
struct GateMatrix {
  Eigen::MatrixXcd entries;
  double delta_t = 0.0;
  std::size_t steps = 1;   // K
  double sub_step = 0.0;   // dt = Delta t / K
  std::string potential_label;

  std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }

  double unitarity_deviation() const {
    const auto n = entries.rows();
    return (entries.adjoint() * entries - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  }
};

/// U_s(Delta t) = (U_s(Delta t / K))^K assembled column by column from delta
/// packets of amplitude 1/sqrt(dx).
inline GateMatrix elementary_gate(const SimSystem& system, const Grid& grid, double delta_t,
                                  std::size_t k_steps) {
  if (k_steps < 1) throw ConfigError("elementary_gate: K must be at least 1");
  if (delta_t < 0.0) throw ConfigError("elementary_gate: Delta t must be non-negative");
  const auto n = static_cast<Eigen::Index>(grid.n);
  GateMatrix gate;
  gate.delta_t = delta_t;
  gate.steps = k_steps;
  gate.sub_step = delta_t / static_cast<double>(k_steps);
  gate.potential_label = system.label;
  gate.entries = Eigen::MatrixXcd::Identity(n, n);
  if (delta_t == 0.0) return gate;

  SplitOperator op(system, grid, gate.sub_step);
  const double amp = 1.0 / std::sqrt(grid.delta_x);
  std::vector<cplx> column(grid.n);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::fill(column.begin(), column.end(), cplx{});
    column[static_cast<std::size_t>(j)] = amp;
    for (std::size_t s = 0; s < k_steps; ++s) op.apply(column);
    for (Eigen::Index i = 0; i < n; ++i) {
      gate.entries(i, j) = column[static_cast<std::size_t>(i)] / amp;
    }
  }
  const double dev = gate.unitarity_deviation();
  if (dev > 1e-8) {
    throw NumericalError("elementary_gate: unitarity breach " + std::to_string(dev));
  }
  return gate;
}

/// psi after 0, 1, ..., N_p applications of the gate.
inline std::vector<GridWavepacket> classic_propagate(const GridWavepacket& psi0,
                                                     const GateMatrix& gate, std::size_t n_pulses) {
  if (gate.size() != psi0.grid.n) throw ConfigError("classic_propagate: gate/grid size mismatch");
  std::vector<GridWavepacket> out;
  out.reserve(n_pulses + 1);
  out.push_back(psi0);
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(
      psi0.amplitudes.data(), static_cast<Eigen::Index>(psi0.amplitudes.size()));
  for (std::size_t l = 0; l < n_pulses; ++l) {
    v = gate.entries * v;
    GridWavepacket next{psi0.grid, std::vector<cplx>(v.data(), v.data() + v.size())};
    out.push_back(std::move(next));
  }
  return out;
}

/// Exact density of an initially real Gaussian in the harmonic potential,
/// sampled on the grid (not renormalized). Amplitudes are sqrt of the density.
inline GridWavepacket analytic_coherent_evolution(const SimSystem& system, const Grid& grid,
                                                  double sigma, double x0, double t) {
  if (!system.harmonic_omega) {
    throw ConfigError("analytic_coherent_evolution: requires a harmonic simulated potential");
  }
  if (!(sigma > 0.0)) throw ConfigError("analytic_coherent_evolution: sigma must be positive");
  const double w = *system.harmonic_omega;
  const double m = system.mass;
  const double c = std::cos(w * t);
  const double s = std::sin(w * t);
  // |psi|^2 = exp(-(x - xc)^2 / sigma_t) / sqrt(pi sigma_t)
  const double sigma_t = sigma * c * c + s * s / (m * m * w * w * sigma);
  const double center = x0 * c;
  GridWavepacket psi{grid, std::vector<cplx>(grid.n)};
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double d = grid.points[j] - center;
    psi.amplitudes[j] = std::sqrt(std::exp(-d * d / sigma_t) / std::sqrt(std::numbers::pi * sigma_t));
  }
  return psi;
}

/// Parameter sigma_t of |psi(x,t)|^2 ~ exp(-(x - xc)^2 / sigma_t).
inline double analytic_width_parameter(const SimSystem& system, double sigma, double t) {
  if (!system.harmonic_omega) throw ConfigError("analytic_width_parameter: non-harmonic system");
  const double w = *system.harmonic_omega;
  const double c = std::cos(w * t);
  const double s = std::sin(w * t);
  return sigma * c * c + s * s / (system.mass * system.mass * w * w * sigma);
}

}  // namespace iontrap
