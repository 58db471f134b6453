#pragma once

// Ion dynamics under H(t) = H0 - mu E(t) in the interaction picture of H0,
// integrated with classical RK4. Field values between samples are linearly
// interpolated.
//
// Closed system:   dc/dt   = i E(t) mu_I(t) c
// Lindblad:        drho/dt = i E(t) [mu_I(t), rho] + L_D rho
// Adjoint (OCT):   deta/dt = i E(t) [mu_I(t), eta] - L_D^dagger eta
//
// with mu_I(t)_{ab} = mu_ab exp(i (E_a - E_b) t). The transition-type Lindblad
// operators sqrt(g)|j><k| pick up phases that cancel in L rho L^dagger and in
// L^dagger L, so L_D has the same form in both pictures.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "iontrap/error.hpp"
#include "iontrap/field.hpp"
#include "iontrap/gridsim.hpp"
#include "iontrap/trap.hpp"

namespace iontrap {

/// mu_I(t) evaluated at the three RK4 nodes of one step.
struct StepDipoles {
  Eigen::MatrixXcd start, mid, end;
};

class InteractionFrame {
 public:
  explicit InteractionFrame(const EigenBasis& basis)
      : shifted_(basis.energies.array() - basis.energies(0)), dipole_(basis.dipole) {}

  Eigen::Index size() const { return shifted_.size(); }
  const Eigen::MatrixXd& dipole() const { return dipole_; }

  Eigen::VectorXcd phases(double t) const {
    Eigen::VectorXcd p(shifted_.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = std::polar(1.0, shifted_(j) * t);
    return p;
  }

  Eigen::MatrixXcd dipole_at(double t) const {
    const Eigen::VectorXcd p = phases(t);
    const Eigen::Index d = size();
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index b = 0; b < d; ++b) {
      const cplx pb = std::conj(p(b));
      for (Eigen::Index a = 0; a < d; ++a) m(a, b) = dipole_(a, b) * p(a) * pb;
    }
    return m;
  }

  StepDipoles step(double t, double h) const {
    return {dipole_at(t), dipole_at(t + 0.5 * h), dipole_at(t + h)};
  }

  /// Interaction-picture amplitudes -> Schroedinger picture at time t
  /// (up to the global phase exp(-i E_0 t)).
  Eigen::VectorXcd to_schroedinger(const Eigen::VectorXcd& c, double t) const {
    return phases(-t).cwiseProduct(c);
  }

 private:
  Eigen::VectorXd shifted_;
  Eigen::MatrixXd dipole_;
};

/// One RK4 step for a block of amplitude columns.
inline void rk4_amplitudes(Eigen::MatrixXcd& c, const StepDipoles& mu, double h, double e_start,
                           double e_end) {
  const cplx i{0.0, 1.0};
  const double e_mid = 0.5 * (e_start + e_end);
  const Eigen::MatrixXcd k1 = (i * e_start) * (mu.start * c);
  const Eigen::MatrixXcd k2 = (i * e_mid) * (mu.mid * (c + (0.5 * h) * k1));
  const Eigen::MatrixXcd k3 = (i * e_mid) * (mu.mid * (c + (0.5 * h) * k2));
  const Eigen::MatrixXcd k4 = (i * e_end) * (mu.end * (c + h * k3));
  c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// ---------------------------------------------------------------------------
// Dissipation

struct DissipationOptions {
  std::set<int> deltas{1, 3};
  /// Use every pair with a nonzero dipole instead of the delta set.
  bool all_dipole_pairs = false;
  /// States entering the heating-time average (0: the computational size N).
  std::size_t averaging_limit = 0;
};

struct DissipationModel {
  double kappa = 0.0;
  /// rates(j, k) = gamma_jk, the rate of |k> -> |j>.
  Eigen::MatrixXd rates;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double mean_rate = 0.0;  // a.u.^-1

  /// 1 / mean rate, a.u. of time; infinite without dissipation.
  double mean_heating_time() const {
    return mean_rate > 0.0 ? 1.0 / mean_rate : std::numeric_limits<double>::infinity();
  }
  bool active() const { return rates.size() > 0 && rates.maxCoeff() > 0.0; }

  /// Total decay rate out of each state, sum_j gamma_jk.
  Eigen::VectorXd loss() const { return rates.colwise().sum().transpose(); }
};

inline DissipationModel build_dissipation(const EigenBasis& basis, double kappa,
                                          const DissipationOptions& opts = {}) {
  if (!(kappa >= 0.0)) throw ConfigError("build_dissipation: kappa must be non-negative");
  const std::size_t d = basis.size();
  const std::size_t avg_limit = opts.averaging_limit == 0
                                    ? basis.computational_size()
                                    : std::min(opts.averaging_limit, d);
  DissipationModel model;
  model.kappa = kappa;
  model.rates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      if (j == k) continue;
      const int gap = static_cast<int>(j > k ? j - k : k - j);
      const double mu = std::abs(basis.dipole(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
      const bool in_set = opts.all_dipole_pairs ? mu > 1e-12 * basis.dipole.cwiseAbs().maxCoeff()
                                                : opts.deltas.count(gap) > 0;
      if (!in_set) continue;
      const double rate = kappa * mu;
      model.rates(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = rate;
      model.pairs.emplace_back(j, k);
      if (j < avg_limit && k < avg_limit && opts.deltas.count(gap) > 0) {
        sum += rate;
        ++count;
      }
    }
  }
  model.mean_rate = count > 0 ? sum / static_cast<double>(count) : 0.0;
  return model;
}

/// L_D and its adjoint for transition-type jump operators.
class Dissipator {
 public:
  Dissipator() = default;
  explicit Dissipator(const DissipationModel& model)
      : rates_(model.rates), half_loss_(0.5 * model.loss()), active_(model.active()) {}

  bool active() const { return active_; }

  /// out += L_D rho
  void add_apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
    if (!active_) return;
    const Eigen::Index d = rho.rows();
    for (Eigen::Index b = 0; b < d; ++b) {
      for (Eigen::Index a = 0; a < d; ++a) out(a, b) -= (half_loss_(a) + half_loss_(b)) * rho(a, b);
    }
    const Eigen::VectorXcd gain = rates_ * rho.diagonal();
    out.diagonal() += gain;
  }

  /// out += L_D^dagger eta
  void add_apply_adjoint(const Eigen::MatrixXcd& eta, Eigen::MatrixXcd& out) const {
    if (!active_) return;
    const Eigen::Index d = eta.rows();
    for (Eigen::Index b = 0; b < d; ++b) {
      for (Eigen::Index a = 0; a < d; ++a) out(a, b) -= (half_loss_(a) + half_loss_(b)) * eta(a, b);
    }
    const Eigen::VectorXcd gain = rates_.transpose() * eta.diagonal();
    out.diagonal() += gain;
  }

 private:
  Eigen::MatrixXd rates_;
  Eigen::VectorXd half_loss_;
  bool active_ = false;
};

enum class LiouvilleDirection { state, adjoint };

namespace detail {

inline Eigen::MatrixXcd liouville_rhs(const Eigen::MatrixXcd& mu, double e, const Dissipator& diss,
                                      LiouvilleDirection dir, const Eigen::MatrixXcd& x) {
  const cplx ie{0.0, e};
  Eigen::MatrixXcd out = ie * (mu * x - x * mu);
  if (dir == LiouvilleDirection::state) {
    diss.add_apply(x, out);
  } else {
    Eigen::MatrixXcd adj = Eigen::MatrixXcd::Zero(x.rows(), x.cols());
    diss.add_apply_adjoint(x, adj);
    out -= adj;
  }
  return out;
}

}  // namespace detail

/// One RK4 step for an operator evolving under the Lindblad (or adjoint) equation.
inline void rk4_operator(Eigen::MatrixXcd& x, const StepDipoles& mu, const Dissipator& diss,
                         LiouvilleDirection dir, double h, double e_start, double e_end) {
  const double e_mid = 0.5 * (e_start + e_end);
  const Eigen::MatrixXcd k1 = detail::liouville_rhs(mu.start, e_start, diss, dir, x);
  const Eigen::MatrixXcd k2 = detail::liouville_rhs(mu.mid, e_mid, diss, dir, x + (0.5 * h) * k1);
  const Eigen::MatrixXcd k3 = detail::liouville_rhs(mu.mid, e_mid, diss, dir, x + (0.5 * h) * k2);
  const Eigen::MatrixXcd k4 = detail::liouville_rhs(mu.end, e_end, diss, dir, x + h * k3);
  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// ---------------------------------------------------------------------------
// Trajectories

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
};

struct PropagationOptions {
  /// RK4 steps per field sample interval (2 halves the step).
  std::size_t substeps = 1;
  /// Record every n-th sample interval (the final state is always recorded).
  std::size_t record_every = 1;
  bool check_invariants = true;
};

namespace detail {

template <class StepFn, class State, class RecordFn>
void march(const ControlField& field, const InteractionFrame& frame, std::size_t substeps,
           State& state, StepFn&& step, RecordFn&& record) {
  const double h = field.dt / static_cast<double>(substeps);
  for (std::size_t n = 0; n < field.intervals(); ++n) {
    const double e0 = field.samples[n];
    const double e1 = field.samples[n + 1];
    for (std::size_t s = 0; s < substeps; ++s) {
      const double f0 = static_cast<double>(s) / static_cast<double>(substeps);
      const double f1 = static_cast<double>(s + 1) / static_cast<double>(substeps);
      const double t = field.time(n) + static_cast<double>(s) * h;
      const StepDipoles mu = frame.step(t, h);
      step(state, mu, h, (1.0 - f0) * e0 + f0 * e1, (1.0 - f1) * e0 + f1 * e1);
    }
    record(n + 1, state);
  }
}

}  // namespace detail

/// Propagates a block of amplitude columns through one pulse; returns the final block.
inline Eigen::MatrixXcd propagate_amplitudes(const Eigen::MatrixXcd& c0, const ControlField& field,
                                             const EigenBasis& basis, std::size_t substeps = 1) {
  field.validate();
  if (c0.rows() != static_cast<Eigen::Index>(basis.size())) {
    throw ConfigError("propagate_amplitudes: state dimension does not match basis");
  }
  const InteractionFrame frame(basis);
  Eigen::MatrixXcd c = c0;
  detail::march(
      field, frame, std::max<std::size_t>(substeps, 1), c,
      [](Eigen::MatrixXcd& x, const StepDipoles& mu, double h, double ea, double eb) {
        rk4_amplitudes(x, mu, h, ea, eb);
      },
      [](std::size_t, const Eigen::MatrixXcd&) {});
  return c;
}

inline Trajectory<Eigen::VectorXcd> propagate_tdse(const Eigen::VectorXcd& c0, const ControlField& field,
                                                   const EigenBasis& basis,
                                                   const PropagationOptions& opts = {}) {
  field.validate();
  if (c0.size() != static_cast<Eigen::Index>(basis.size())) {
    throw ConfigError("propagate_tdse: state dimension does not match basis");
  }
  const double n0 = c0.squaredNorm();
  if (std::abs(n0 - 1.0) > 1e-8) throw ConfigError("propagate_tdse: initial state not normalized");
  const InteractionFrame frame(basis);
  const std::size_t every = std::max<std::size_t>(opts.record_every, 1);
  Trajectory<Eigen::VectorXcd> traj;
  traj.times.push_back(0.0);
  traj.states.push_back(c0);
  Eigen::MatrixXcd c = c0;
  detail::march(
      field, frame, std::max<std::size_t>(opts.substeps, 1), c,
      [](Eigen::MatrixXcd& x, const StepDipoles& mu, double h, double ea, double eb) {
        rk4_amplitudes(x, mu, h, ea, eb);
      },
      [&](std::size_t n, const Eigen::MatrixXcd& x) {
        if (n % every == 0 || n == field.intervals()) {
          traj.times.push_back(field.time(n));
          traj.states.emplace_back(x.col(0));
        }
      });
  if (opts.check_invariants) {
    const double drift = std::abs(c.col(0).squaredNorm() - n0);
    if (drift > 1e-8) {
      throw NumericalError("propagate_tdse: norm drift " + std::to_string(drift) +
                           " exceeds 1e-8; reduce the time step");
    }
  }
  return traj;
}

/// Realized gate U_P = P U(t_pulse) P on the first n states.
inline GateMatrix evolution_operator(const ControlField& field, const EigenBasis& basis, std::size_t n,
                                     std::size_t substeps = 1) {
  if (n == 0 || n > basis.size()) throw ConfigError("evolution_operator: need 0 < N <= D");
  const auto d = static_cast<Eigen::Index>(basis.size());
  const auto ni = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXcd c0 = Eigen::MatrixXcd::Identity(d, ni);
  const Eigen::MatrixXcd c = propagate_amplitudes(c0, field, basis, substeps);
  const double ortho =
      (c.adjoint() * c - Eigen::MatrixXcd::Identity(ni, ni)).cwiseAbs().maxCoeff();
  if (ortho > 1e-8) {
    throw NumericalError("evolution_operator: propagated columns lost orthonormality (" +
                         std::to_string(ortho) + ")");
  }
  GateMatrix g;
  g.entries = c.topRows(ni);
  g.delta_t = field.t_pulse();
  g.steps = field.intervals();
  g.sub_step = field.dt;
  g.potential_label = "realized";
  return g;
}

struct DensityChecks {
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
};

inline DensityChecks inspect_density(const Eigen::MatrixXcd& rho) {
  DensityChecks c;
  c.trace_error = std::abs(rho.trace() - cplx{1.0, 0.0});
  c.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

inline Trajectory<Eigen::MatrixXcd> propagate_lindblad(const Eigen::MatrixXcd& rho0,
                                                       const ControlField& field,
                                                       const EigenBasis& basis,
                                                       const DissipationModel& diss,
                                                       const PropagationOptions& opts = {}) {
  field.validate();
  const auto d = static_cast<Eigen::Index>(basis.size());
  if (rho0.rows() != d || rho0.cols() != d) {
    throw ConfigError("propagate_lindblad: density matrix dimension does not match basis");
  }
  if (diss.rates.size() != 0 && diss.rates.rows() != d) {
    throw ConfigError("propagate_lindblad: dissipation model built for a different basis");
  }
  const DensityChecks initial = inspect_density(rho0);
  if (initial.trace_error > 1e-8 || initial.hermiticity_error > 1e-10 || initial.min_eigenvalue < -1e-8) {
    throw ConfigError("propagate_lindblad: initial state is not a valid density matrix");
  }
  const InteractionFrame frame(basis);
  const Dissipator dissipator(diss);
  const std::size_t every = std::max<std::size_t>(opts.record_every, 1);
  Trajectory<Eigen::MatrixXcd> traj;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);

  auto verify = [&](const Eigen::MatrixXcd& rho, double t) {
    const DensityChecks c = inspect_density(rho);
    if (c.trace_error > 1e-8 || c.hermiticity_error > 1e-10 || c.min_eigenvalue < -1e-6) {
      throw NumericalError("propagate_lindblad: density matrix invalid at t=" + std::to_string(t) +
                           " (trace err " + std::to_string(c.trace_error) + ", herm err " +
                           std::to_string(c.hermiticity_error) + ", min eig " +
                           std::to_string(c.min_eigenvalue) + "); reduce the time step");
    }
  };

  Eigen::MatrixXcd rho = rho0;
  detail::march(
      field, frame, std::max<std::size_t>(opts.substeps, 1), rho,
      [&](Eigen::MatrixXcd& x, const StepDipoles& mu, double h, double ea, double eb) {
        rk4_operator(x, mu, dissipator, LiouvilleDirection::state, h, ea, eb);
      },
      [&](std::size_t n, const Eigen::MatrixXcd& x) {
        if (n % every == 0 || n == field.intervals()) {
          traj.times.push_back(field.time(n));
          traj.states.push_back(x);
          if (opts.check_invariants) verify(x, field.time(n));
        }
      });
  return traj;
}

/// Propagates arbitrary (not necessarily Hermitian) operators through one
/// pulse of Lindblad dynamics. Used for channel fidelities.
inline std::vector<Eigen::MatrixXcd> propagate_operators(std::vector<Eigen::MatrixXcd> ops,
                                                         const ControlField& field,
                                                         const EigenBasis& basis,
                                                         const DissipationModel& diss,
                                                         std::size_t substeps = 1) {
  field.validate();
  const InteractionFrame frame(basis);
  const Dissipator dissipator(diss);
  detail::march(
      field, frame, std::max<std::size_t>(substeps, 1), ops,
      [&](std::vector<Eigen::MatrixXcd>& xs, const StepDipoles& mu, double h, double ea, double eb) {
        for (auto& x : xs) rk4_operator(x, mu, dissipator, LiouvilleDirection::state, h, ea, eb);
      },
      [](std::size_t, const std::vector<Eigen::MatrixXcd>&) {});
  return ops;
}

/// |c_j|^2 for j < n.
inline std::vector<double> populations(const Eigen::VectorXcd& c, std::size_t n) {
  std::vector<double> p(n);
  for (std::size_t j = 0; j < n; ++j) p[j] = std::norm(c(static_cast<Eigen::Index>(j)));
  return p;
}

inline std::vector<double> populations(const Eigen::MatrixXcd& rho, std::size_t n) {
  std::vector<double> p(n);
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = rho(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)).real();
  }
  return p;
}

/// Zero-pads an N-amplitude vector into the D-dimensional dynamical basis.
inline Eigen::VectorXcd embed(const Eigen::VectorXcd& c, std::size_t d) {
  if (static_cast<std::size_t>(c.size()) > d) throw ConfigError("embed: state larger than basis");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
  out.head(c.size()) = c;
  return out;
}

}  // namespace iontrap
