#pragma once

// Grid wavefunction <-> ion motional amplitudes. Qubit j is both grid point
// x_j and eigenstate chi_j.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "iontrap/error.hpp"
#include "iontrap/gridsim.hpp"

namespace iontrap {

struct QubitAmplitudes {
  Eigen::VectorXcd c;
  double delta_x = 1.0;

  double norm_squared() const { return c.squaredNorm(); }
};

inline QubitAmplitudes encode(const GridWavepacket& psi) {
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > 1e-10) {
    throw ConfigError("encode: wave packet is not normalized (norm " + std::to_string(norm) + ")");
  }
  QubitAmplitudes out;
  out.delta_x = psi.grid.delta_x;
  out.c.resize(static_cast<Eigen::Index>(psi.amplitudes.size()));
  const double s = std::sqrt(psi.grid.delta_x);
  for (std::size_t j = 0; j < psi.amplitudes.size(); ++j) {
    out.c[static_cast<Eigen::Index>(j)] = psi.amplitudes[j] * s;
  }
  return out;
}

/// Localization probabilities |c_j|^2 / dx, i.e. |psi(x_j)|^2.
inline std::vector<double> decode(const QubitAmplitudes& amps) {
  std::vector<double> out(static_cast<std::size_t>(amps.c.size()));
  for (Eigen::Index j = 0; j < amps.c.size(); ++j) {
    out[static_cast<std::size_t>(j)] = std::norm(amps.c[j]) / amps.delta_x;
  }
  return out;
}

/// Inverse of encode on a given grid.
inline GridWavepacket to_wavepacket(const QubitAmplitudes& amps, const Grid& grid) {
  if (static_cast<std::size_t>(amps.c.size()) != grid.n) {
    throw ConfigError("to_wavepacket: amplitude count does not match grid");
  }
  GridWavepacket psi{grid, std::vector<cplx>(grid.n)};
  const double s = 1.0 / std::sqrt(grid.delta_x);
  for (std::size_t j = 0; j < grid.n; ++j) psi.amplitudes[j] = amps.c[static_cast<Eigen::Index>(j)] * s;
  return psi;
}

}  // namespace iontrap
