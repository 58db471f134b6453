#pragma once

// Gate fidelity of an open-system map. With rho_jk = Lambda(|j><k|) and
// target columns phi_j = U_s|j>,
//
//   F = Re sum_jk <phi_j| rho_jk |phi_k> / N^2,
//
// which reduces to |Tr(U_s^dagger U_P)|^2 / N^2 for unitary dynamics.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "iontrap/error.hpp"

namespace iontrap {

/// |j><k| for j, k < n embedded in d dimensions, row-major in (j, k).
inline std::vector<Eigen::MatrixXcd> coherence_basis(std::size_t n, std::size_t d) {
  std::vector<Eigen::MatrixXcd> ops;
  ops.reserve(n * n);
  const auto di = static_cast<Eigen::Index>(d);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(di, di);
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = 1.0;
      ops.push_back(std::move(m));
    }
  }
  return ops;
}

inline double channel_fidelity(const std::vector<Eigen::MatrixXcd>& evolved,
                               const Eigen::MatrixXcd& target) {
  const auto n = static_cast<std::size_t>(target.rows());
  if (evolved.size() != n * n) throw ConfigError("channel_fidelity: need N^2 evolved operators");
  const Eigen::Index d = evolved.front().rows();
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(d, static_cast<Eigen::Index>(n));
  phi.topRows(static_cast<Eigen::Index>(n)) = target;
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& rho = evolved[j * n + k];
      sum += (phi.col(static_cast<Eigen::Index>(j)).adjoint() * rho *
              phi.col(static_cast<Eigen::Index>(k)))(0, 0).real();
    }
  }
  return sum / static_cast<double>(n * n);
}

}  // namespace iontrap
