#pragma once

// Anharmonic single-ion trap: H0 = p^2/2m + q(k z^2/2 + k' z^4/24), diagonalized
// in the eigenfunctions of its harmonic part.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "iontrap/error.hpp"
#include "iontrap/units.hpp"

namespace iontrap {

struct TrapParams {
  double mass = 111.0 * units::kDaltonInElectronMasses;
  double charge = 1.0;
  double k = 3.5828e-14;
  double k_quart = 3.5828e-18;
  std::size_t primitive_size = 50;    // M
  std::size_t dynamical_size = 32;    // D
  std::size_t computational_size = 16;  // N

  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("trap: mass must be positive");
    if (!(k > 0.0)) throw ConfigError("trap: k must be positive");
    if (!(k_quart >= 0.0)) throw ConfigError("trap: k_quart must be non-negative");
    if (!(charge > 0.0)) throw ConfigError("trap: charge must be positive");
    if (computational_size == 0 || computational_size > dynamical_size ||
        dynamical_size > primitive_size) {
      throw ConfigError("trap: sizes must satisfy 0 < N <= D <= M (got N=" +
                        std::to_string(computational_size) +
                        ", D=" + std::to_string(dynamical_size) +
                        ", M=" + std::to_string(primitive_size) + ")");
    }
  }

  double harmonic_omega() const { return std::sqrt(charge * k / mass); }
};

/// Lowest D eigenstates of H0. Immutable after construction.
struct EigenBasis {
  TrapParams params;
  double omega = 0.0;
  Eigen::VectorXd energies;  // D, ascending
  Eigen::MatrixXd vectors;   // M x D, columns are eigenvectors
  Eigen::MatrixXd z_matrix;  // D x D, <j|z|k>
  Eigen::MatrixXd dipole;    // D x D, q<j|z|k>

  std::size_t size() const { return static_cast<std::size_t>(energies.size()); }
  std::size_t computational_size() const { return params.computational_size; }

  /// Bohr angular frequency (E_k - E_j) in a.u.
  double angular_frequency(std::size_t j, std::size_t k) const {
    return energies[static_cast<Eigen::Index>(k)] - energies[static_cast<Eigen::Index>(j)];
  }
  double frequency_hz(std::size_t j, std::size_t k) const {
    return units::angular_au_to_hz(angular_frequency(j, k));
  }

  /// First `d` states as a smaller dynamical basis (N is clamped to d).
  EigenBasis truncated(std::size_t d) const {
    if (d == 0 || d > size()) throw ConfigError("EigenBasis::truncated: bad size");
    EigenBasis out;
    out.params = params;
    out.params.dynamical_size = d;
    out.params.computational_size = std::min(params.computational_size, d);
    out.omega = omega;
    const auto n = static_cast<Eigen::Index>(d);
    out.energies = energies.head(n);
    out.vectors = vectors.leftCols(n);
    out.z_matrix = z_matrix.topLeftCorner(n, n);
    out.dipole = dipole.topLeftCorner(n, n);
    return out;
  }
};

namespace detail {

/// Matrix of (a + a^dagger) in the first `n` harmonic-oscillator states.
inline Eigen::MatrixXd ladder_position(Eigen::Index n) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double v = std::sqrt(static_cast<double>(i + 1));
    x(i, i + 1) = v;
    x(i + 1, i) = v;
  }
  return x;
}

}  // namespace detail

inline EigenBasis solve_trap(const TrapParams& params) {
  params.validate();
  const auto m = static_cast<Eigen::Index>(params.primitive_size);
  const auto d = static_cast<Eigen::Index>(params.dynamical_size);
  const double omega = params.harmonic_omega();
  const double x0 = std::sqrt(1.0 / (2.0 * params.mass * omega));

  // (a + a^dagger)^4 couples n to n +- 4, so build it four states larger and
  // truncate; the M x M block is then exact.
  const Eigen::MatrixXd x_big = detail::ladder_position(m + 4);
  const Eigen::MatrixXd x2 = x_big * x_big;
  const Eigen::MatrixXd x4 = (x2 * x2).topLeftCorner(m, m);

  Eigen::MatrixXd h = params.charge * params.k_quart / 24.0 * std::pow(x0, 4) * x4;
  for (Eigen::Index n = 0; n < m; ++n) h(n, n) += omega * (static_cast<double>(n) + 0.5);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw ConfigError("trap: diagonalization of H0 failed");
  }

  EigenBasis basis;
  basis.params = params;
  basis.omega = omega;
  basis.energies = solver.eigenvalues().head(d);
  basis.vectors = solver.eigenvectors().leftCols(d);

  for (Eigen::Index j = 0; j < d; ++j) {
    auto col = basis.vectors.col(j);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
  }
  for (Eigen::Index j = 1; j < d; ++j) {
    if (!(basis.energies(j) > basis.energies(j - 1))) {
      throw NumericalError("trap: eigenvalues are degenerate");
    }
  }

  const Eigen::MatrixXd z_prim = x0 * detail::ladder_position(m);
  basis.z_matrix = basis.vectors.transpose() * z_prim * basis.vectors;
  // Symmetrize away the O(eps) asymmetry of the triple product.
  basis.z_matrix = 0.5 * (basis.z_matrix + basis.z_matrix.transpose()).eval();
  basis.dipole = params.charge * basis.z_matrix;
  return basis;
}

struct Transition {
  std::size_t lower = 0;
  std::size_t upper = 0;
  double frequency_hz = 0.0;
  double dipole = 0.0;
};

/// All pairs (j, j + delta) with both indices below `limit` (default: N),
/// ordered by delta then by j.
inline std::vector<Transition> transition_table(const EigenBasis& basis,
                                                const std::set<int>& deltas,
                                                std::size_t limit = 0) {
  if (deltas.empty()) throw ConfigError("transition_table: empty delta set");
  if (limit == 0) limit = basis.computational_size();
  if (limit > basis.size()) throw ConfigError("transition_table: limit exceeds basis");
  std::vector<Transition> out;
  for (int delta : deltas) {
    if (delta <= 0) throw ConfigError("transition_table: deltas must be positive");
    const auto step = static_cast<std::size_t>(delta);
    for (std::size_t j = 0; j + step < limit; ++j) {
      const std::size_t k = j + step;
      out.push_back({j, k, basis.frequency_hz(j, k),
                     basis.dipole(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k))});
    }
  }
  return out;
}

}  // namespace iontrap
