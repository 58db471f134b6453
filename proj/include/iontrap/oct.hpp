#pragma once

// Multi-target optimal control with the monotonically convergent two-sweep
// iteration. Each iteration
//
//   1. propagates the multipliers backward from their targets under an
//      intermediate field E~ = (1/alpha) g(psi_old, lambda), and
//   2. propagates the states forward under the new field
//      E' = (1/alpha) g(psi_new, lambda), updated at every time sample.
//
// For an objective that is linear in the propagated states (a sum of
// projector expectations, or its coherence-operator generalization) this
// gives J' - J = int alpha [(E' - E~)^2 + (E~ - E)^2] dt >= 0 with
// J = O - int alpha(t) E(t)^2 dt and alpha(t) = alpha0 / sin^2(pi t / T).
//
// The field value at t_{n+1} depends on the state at t_{n+1}, which depends
// on the field through the RK4 stages; it is solved by a short fixed-point
// iteration so that the stored samples reproduce the swept trajectory.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "iontrap/channel.hpp"
#include "iontrap/encoder.hpp"
#include "iontrap/error.hpp"
#include "iontrap/field.hpp"
#include "iontrap/gridsim.hpp"
#include "iontrap/propagator.hpp"
#include "iontrap/trap.hpp"
#include "iontrap/units.hpp"

namespace iontrap {

enum class Functional { fidelity, probability };

inline const char* to_string(Functional f) { return f == Functional::fidelity ? "F" : "P"; }

struct OctRecord {
  std::size_t iteration = 0;
  double objective = 0.0;  // J
  double fidelity = 0.0;   // |Tr(U_s^dagger U_P)|^2 / N^2 (or its open-system form)
  double fluence = 0.0;    // int E^2 dt
};

enum class OctStop { goal_reached, max_iterations, stagnated };

struct OctTrace {
  std::vector<OctRecord> records;
  OctStop stop = OctStop::max_iterations;

  const OctRecord& last() const { return records.back(); }
};

struct OctResult {
  ControlField field;
  OctTrace trace;
};

struct OctConfig {
  double t_pulse = units::us_to_au(96.0);
  double dt = units::ps_to_au(960.0);
  double alpha0 = 1e15;
  Functional functional = Functional::probability;
  std::size_t max_iterations = 1500;
  double fidelity_goal = 0.99999;
  bool include_superposition_target = true;

  double monotonic_tolerance = 1e-10;
  std::size_t stagnation_window = 20;
  double stagnation_tolerance = 1e-12;
  /// Added to reported iteration numbers (resumed runs).
  std::size_t iteration_offset = 0;
  /// Called after each record is appended, with the field that produced it.
  std::function<void(const OctRecord&, const ControlField&)> on_iteration;

  void validate() const {
    if (!(t_pulse > 0.0) || !(dt > 0.0) || dt > t_pulse) throw ConfigError("oct: bad t_pulse/dt");
    if (!(alpha0 > 0.0)) throw ConfigError("oct: alpha0 must be positive");
    if (!(fidelity_goal > 0.0 && fidelity_goal <= 1.0)) {
      throw ConfigError("oct: fidelity_goal must lie in (0, 1]");
    }
    if (functional == Functional::probability && !include_superposition_target) {
      throw ConfigError("oct: functional P requires the superposition target");
    }
  }
};

/// alpha0 / sin^2(pi t / T); +infinity at the pulse edges.
inline double penalty(double t, const OctConfig& cfg) {
  const double s = std::sin(std::numbers::pi * t / cfg.t_pulse);
  if (t <= 0.0 || t >= cfg.t_pulse || s == 0.0) return std::numeric_limits<double>::infinity();
  return cfg.alpha0 / (s * s);
}

/// 1 / alpha(t_i) on the sample grid, exactly zero at both ends.
inline std::vector<double> update_factors(const ControlField& field, double alpha0) {
  std::vector<double> w(field.samples.size(), 0.0);
  const double t_pulse = field.t_pulse();
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    const double s = std::sin(std::numbers::pi * field.time(i) / t_pulse);
    w[i] = s * s / alpha0;
  }
  return w;
}

/// int alpha(t) E(t)^2 dt by the trapezoidal rule; the edge samples carry no weight.
inline double penalty_integral(const ControlField& field, double alpha0) {
  const double t_pulse = field.t_pulse();
  double sum = 0.0;
  for (std::size_t i = 1; i + 1 < field.samples.size(); ++i) {
    const double s = std::sin(std::numbers::pi * field.time(i) / t_pulse);
    sum += field.samples[i] * field.samples[i] * alpha0 / (s * s);
  }
  return sum * field.dt;
}

/// |Tr(U_s^dagger U_P)|^2 / N^2
inline double fidelity(const GateMatrix& target, const GateMatrix& realized) {
  if (target.size() != realized.size()) throw ConfigError("fidelity: size mismatch");
  const auto n = static_cast<double>(target.size());
  return std::norm((target.entries.adjoint() * realized.entries).trace()) / (n * n);
}

inline double fidelity(const Eigen::MatrixXcd& target, const Eigen::MatrixXcd& realized) {
  if (target.rows() != realized.rows() || target.cols() != realized.cols()) {
    throw ConfigError("fidelity: size mismatch");
  }
  const auto n = static_cast<double>(target.rows());
  return std::norm((target.adjoint() * realized).trace()) / (n * n);
}

/// Sum of A sin(w_m t) sin^2(pi t / T) over the Delta nu = 1 and 3
/// transitions among the computational states.
inline ControlField make_guess_field(const EigenBasis& basis, const OctConfig& cfg,
                                     double amplitude = 1.945e-13,
                                     const std::set<int>& deltas = {1, 3}) {
  if (basis.size() < basis.computational_size()) throw ConfigError("make_guess_field: basis too small");
  ControlField field = ControlField::zeros(cfg.t_pulse, cfg.dt);
  const auto lines = transition_table(basis, deltas);
  const double t_pulse = field.t_pulse();
  for (std::size_t i = 1; i + 1 < field.samples.size(); ++i) {
    const double t = field.time(i);
    const double env = std::sin(std::numbers::pi * t / t_pulse);
    double sum = 0.0;
    for (const auto& line : lines) sum += std::sin(basis.angular_frequency(line.lower, line.upper) * t);
    field.samples[i] = amplitude * sum * env * env;
  }
  return field;
}

/// State transitions |j> -> U_s|j>, plus the uniform superposition when requested.
struct TargetSet {
  GateMatrix gate;
  bool superposition = false;

  std::size_t size() const { return gate.size(); }

  static TargetSet for_gate(GateMatrix gate, bool superposition) {
    const double dev = gate.unitarity_deviation();
    if (dev > 1e-8) throw ConfigError("TargetSet: gate is not unitary (" + std::to_string(dev) + ")");
    return TargetSet{std::move(gate), superposition};
  }

  /// Initial states (columns) in the d-dimensional dynamical basis.
  Eigen::MatrixXcd initial_states(std::size_t d) const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), n + (superposition ? 1 : 0));
    c.block(0, 0, n, n).setIdentity();
    if (superposition) c.col(n).head(n).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    return c;
  }

  Eigen::MatrixXcd target_states(std::size_t d) const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), n + (superposition ? 1 : 0));
    c.block(0, 0, n, n) = gate.entries;
    if (superposition) c.col(n).head(n) = gate.entries.rowwise().sum() / std::sqrt(static_cast<double>(n));
    return c;
  }
};

namespace detail {

/// Closed-system wave-packet model: columns of a D x T block.
class AmplitudeModel {
 public:
  using State = Eigen::MatrixXcd;

  AmplitudeModel(const EigenBasis& basis, Eigen::MatrixXcd initial, Eigen::MatrixXcd targets,
                 Functional functional, std::size_t gate_size)
      : frame_(basis),
        initial_(std::move(initial)),
        targets_(std::move(targets)),
        functional_(functional),
        gate_size_(gate_size) {}

  const InteractionFrame& frame() const { return frame_; }
  State initial_state() const { return initial_; }
  State adjoint_final() const { return targets_; }

  void step_state(State& s, const StepDipoles& mu, double h, double ea, double eb) const {
    rk4_amplitudes(s, mu, h, ea, eb);
  }
  void step_adjoint(State& s, const StepDipoles& mu, double h, double ea, double eb) const {
    rk4_amplitudes(s, mu, h, ea, eb);
  }

  double coupling(const State& psi, const State& lam, const Eigen::MatrixXcd& mu) const {
    const Eigen::MatrixXcd mu_lam = mu * lam;
    const Eigen::RowVectorXcd a = psi.cwiseProduct(mu_lam.conjugate()).colwise().sum().conjugate();
    const Eigen::RowVectorXcd b = lam.cwiseProduct(psi.conjugate()).colwise().sum().conjugate();
    // a_j = <psi_j|mu|lam_j>, b_j = <lam_j|psi_j>
    if (functional_ == Functional::probability) return a.cwiseProduct(b).sum().imag();
    return (a.sum() * b.sum()).imag();
  }

  double objective(const State& psi) const {
    const Eigen::RowVectorXcd overlaps = targets_.cwiseProduct(psi.conjugate()).colwise().sum().conjugate();
    if (functional_ == Functional::probability) return overlaps.cwiseAbs2().sum();
    return std::norm(overlaps.sum());
  }

  double fidelity(const State& psi, const ControlField&) const {
    const auto n = static_cast<Eigen::Index>(gate_size_);
    const Eigen::MatrixXcd target = targets_.block(0, 0, n, n);
    const Eigen::MatrixXcd realized = psi.block(0, 0, n, n);
    return iontrap::fidelity(target, realized);
  }

 private:
  InteractionFrame frame_;
  Eigen::MatrixXcd initial_;
  Eigen::MatrixXcd targets_;
  Functional functional_;
  std::size_t gate_size_;
};

/// Open-system model: density matrices rho_j / multipliers eta_j (functional
/// P) or the N^2 coherences |j><k| (functional F).
class OperatorModel {
 public:
  using State = std::vector<Eigen::MatrixXcd>;

  OperatorModel(const EigenBasis& basis, const TargetSet& targets, Functional functional,
                const DissipationModel& diss)
      : basis_(basis), frame_(basis), dissipator_(diss), diss_(diss), functional_(functional),
        gate_(targets.gate.entries) {
    const std::size_t d = basis.size();
    const Eigen::MatrixXcd init = targets.initial_states(d);
    const Eigen::MatrixXcd goal = targets.target_states(d);
    if (functional == Functional::probability) {
      for (Eigen::Index j = 0; j < init.cols(); ++j) {
        initial_.push_back(init.col(j) * init.col(j).adjoint());
        targets_.push_back(goal.col(j) * goal.col(j).adjoint());
      }
    } else {
      const auto n = static_cast<Eigen::Index>(targets.size());
      initial_ = coherence_basis(targets.size(), d);
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) targets_.push_back(goal.col(j) * goal.col(k).adjoint());
      }
    }
  }

  const InteractionFrame& frame() const { return frame_; }
  State initial_state() const { return initial_; }
  State adjoint_final() const { return targets_; }

  void step_state(State& s, const StepDipoles& mu, double h, double ea, double eb) const {
    for (auto& x : s) rk4_operator(x, mu, dissipator_, LiouvilleDirection::state, h, ea, eb);
  }
  void step_adjoint(State& s, const StepDipoles& mu, double h, double ea, double eb) const {
    for (auto& x : s) rk4_operator(x, mu, dissipator_, LiouvilleDirection::adjoint, h, ea, eb);
  }

  /// -1/2 sum Im Tr(eta^dagger [mu, rho])
  double coupling(const State& rho, const State& eta, const Eigen::MatrixXcd& mu) const {
    cplx sum{};
    for (std::size_t j = 0; j < rho.size(); ++j) {
      const Eigen::MatrixXcd comm = mu * rho[j] - rho[j] * mu;
      sum += eta[j].conjugate().cwiseProduct(comm).sum();
    }
    return -0.5 * sum.imag();
  }

  double objective(const State& rho) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) sum += targets_[j].conjugate().cwiseProduct(rho[j]).sum().real();
    return sum;
  }

  double fidelity(const State& rho, const ControlField& field) const {
    const auto n = static_cast<double>(gate_.rows());
    if (functional_ == Functional::fidelity) return objective(rho) / (n * n);
    const auto evolved = propagate_operators(coherence_basis(gate_.rows(), basis_.size()), field, basis_, diss_);
    return channel_fidelity(evolved, gate_);
  }

 private:
  EigenBasis basis_;
  InteractionFrame frame_;
  Dissipator dissipator_;
  DissipationModel diss_;
  Functional functional_;
  Eigen::MatrixXcd gate_;
  State initial_;
  State targets_;
};

/// Trajectory stored at every k-th sample and replayed segment by segment in
/// the direction it was produced. Dissipative dynamics is only stable in that
/// direction: states forward, multipliers backward.
template <class Model, bool Adjoint>
class Tape {
 public:
  using State = typename Model::State;

  Tape(const Model& model, std::size_t intervals, double dt)
      : model_(model),
        intervals_(intervals),
        dt_(dt),
        stride_(std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(intervals)))))),
        checkpoints_(intervals / stride_ + 2) {}

  void record(std::size_t n, const State& s) {
    if (n % stride_ == 0 || n == intervals_) checkpoints_[slot(n)] = s;
    loaded_ = kNone;
  }

  /// Value at sample n under `samples`; each segment is replayed once when
  /// n runs against the recording direction.
  const State& at(std::size_t n, const std::vector<double>& samples) {
    const std::size_t base = n - n % stride_;
    const std::size_t top = std::min(base + stride_, intervals_);
    if (base != loaded_) {
      buffer_.resize(top - base + 1);
      if constexpr (Adjoint) {
        buffer_.back() = checkpoints_[slot(top)];
        for (std::size_t m = top; m > base; --m) {
          State& s = buffer_[m - 1 - base];
          s = buffer_[m - base];
          model_.step_adjoint(s, model_.frame().step(time(m), -dt_), -dt_, samples[m], samples[m - 1]);
        }
      } else {
        buffer_.front() = checkpoints_[slot(base)];
        for (std::size_t m = base; m < top; ++m) {
          State& s = buffer_[m + 1 - base];
          s = buffer_[m - base];
          model_.step_state(s, model_.frame().step(time(m), dt_), dt_, samples[m], samples[m + 1]);
        }
      }
      loaded_ = base;
    }
    return buffer_[n - base];
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t slot(std::size_t n) const { return n == intervals_ ? checkpoints_.size() - 1 : n / stride_; }
  double time(std::size_t m) const { return dt_ * static_cast<double>(m); }

  const Model& model_;
  std::size_t intervals_;
  double dt_;
  std::size_t stride_;
  std::vector<State> checkpoints_;
  std::vector<State> buffer_;
  std::size_t loaded_ = kNone;
};

template <class Model>
typename Model::State forward_pass(const Model& model, const ControlField& field,
                                   Tape<Model, false>* tape = nullptr) {
  auto state = model.initial_state();
  const double h = field.dt;
  if (tape) tape->record(0, state);
  for (std::size_t n = 0; n < field.intervals(); ++n) {
    const StepDipoles mu = model.frame().step(field.time(n), h);
    model.step_state(state, mu, h, field.samples[n], field.samples[n + 1]);
    if (tape) tape->record(n + 1, state);
  }
  return state;
}

/// Solves x = f(x) for one field sample by secant iteration. `f` steps the
/// trial state with x and returns the updated field; on return the last call
/// was made with the returned value, so the stepped state and the stored
/// sample agree.
template <class Fn>
double solve_sample(Fn&& f, double guess, double scale) {
  constexpr int kMaxEvaluations = 12;
  auto settled = [&](double r, double x) { return std::abs(r) <= 1e-14 * std::max(std::abs(x), scale); };
  double x0 = guess;
  double r0 = f(x0) - x0;
  if (settled(r0, x0)) return x0;
  double x1 = x0 + r0;
  double r1 = f(x1) - x1;
  for (int k = 2; k < kMaxEvaluations && !settled(r1, x1); ++k) {
    if (r1 == r0) break;
    const double x2 = x1 - r1 * (x1 - x0) / (r1 - r0);
    x0 = x1;
    r0 = r1;
    x1 = x2;
    r1 = f(x1) - x1;
  }
  return x1;
}

inline double extrapolate(const std::vector<double>& e, std::size_t known, std::size_t prev, bool has_prev) {
  return has_prev ? 2.0 * e[known] - e[prev] : e[known];
}

template <class Model>
OctResult run_monotonic(const Model& model, ControlField field, const OctConfig& cfg) {
  cfg.validate();
  field.validate();
  if (std::abs(field.t_pulse() - cfg.t_pulse) > 1e-9 * cfg.t_pulse) {
    throw ConfigError("oct: guess field duration does not match t_pulse");
  }
  const std::size_t last = field.intervals();
  const double h = field.dt;
  const std::vector<double> w = update_factors(field, cfg.alpha0);
  // Edges carry no update; keep them at zero so the penalty stays finite.
  field.samples.front() = 0.0;
  field.samples.back() = 0.0;

  OctResult result;
  Tape<Model, false> tape(model, last, h);
  Tape<Model, true> lam_tape(model, last, h);
  auto psi_final = forward_pass(model, field, &tape);
  double objective = model.objective(psi_final) - penalty_integral(field, cfg.alpha0);
  double fid = model.fidelity(psi_final, field);

  auto push = [&](std::size_t it) {
    OctRecord rec{cfg.iteration_offset + it, objective, fid, field.fluence()};
    result.trace.records.push_back(rec);
    if (cfg.on_iteration) cfg.on_iteration(rec, field);
  };
  push(0);

  std::vector<double> tilde(last + 1, 0.0);
  std::vector<double> fresh(last + 1, 0.0);
  std::size_t flat_run = 0;
  for (std::size_t it = 1;; ++it) {
    if (fid >= cfg.fidelity_goal) {
      result.trace.stop = OctStop::goal_reached;
      break;
    }
    if (it > cfg.max_iterations) {
      result.trace.stop = OctStop::max_iterations;
      break;
    }
    const double scale = std::max(field.peak(), 1e-300);

    // Backward sweep: multipliers under E~, previous states under E.
    auto lam = model.adjoint_final();
    lam_tape.record(last, lam);
    tilde[last] = 0.0;
    for (std::size_t n = last; n >= 1; --n) {
      const StepDipoles mu = model.frame().step(field.time(n), -h);
      const auto& psi = tape.at(n - 1, field.samples);
      auto trial = lam;
      double value = 0.0;
      if (w[n - 1] == 0.0) {
        model.step_adjoint(trial, mu, -h, tilde[n], 0.0);
      } else {
        value = solve_sample(
            [&](double x) {
              trial = lam;
              model.step_adjoint(trial, mu, -h, tilde[n], x);
              return w[n - 1] * model.coupling(psi, trial, mu.end);
            },
            extrapolate(tilde, n, n + 1, n + 1 <= last), scale);
      }
      lam = std::move(trial);
      tilde[n - 1] = value;
      lam_tape.record(n - 1, lam);
    }

    // Forward sweep: multipliers under E~, new states under E'.
    auto state = model.initial_state();
    tape.record(0, state);
    fresh[0] = 0.0;
    for (std::size_t n = 0; n < last; ++n) {
      const StepDipoles mu = model.frame().step(field.time(n), h);
      const auto& lam_next = lam_tape.at(n + 1, tilde);
      auto trial = state;
      double value = 0.0;
      if (w[n + 1] == 0.0) {
        model.step_state(trial, mu, h, fresh[n], 0.0);
      } else {
        value = solve_sample(
            [&](double x) {
              trial = state;
              model.step_state(trial, mu, h, fresh[n], x);
              return w[n + 1] * model.coupling(trial, lam_next, mu.end);
            },
            extrapolate(fresh, n, n - 1, n >= 1), scale);
      }
      if (!std::isfinite(value)) throw NumericalError("oct: field became non-finite");
      state = std::move(trial);
      fresh[n + 1] = value;
      tape.record(n + 1, state);
    }

    field.samples = fresh;
    psi_final = std::move(state);
    const double previous = objective;
    objective = model.objective(psi_final) - penalty_integral(field, cfg.alpha0);
    fid = model.fidelity(psi_final, field);
    push(it);

    if (objective < previous - cfg.monotonic_tolerance * std::max(1.0, std::abs(previous))) {
      throw NumericalError("oct: objective decreased from " + std::to_string(previous) + " to " +
                           std::to_string(objective) + " at iteration " +
                           std::to_string(cfg.iteration_offset + it));
    }
    const double gain = (objective - previous) / std::max(1.0, std::abs(previous));
    flat_run = gain < cfg.stagnation_tolerance ? flat_run + 1 : 0;
    if (cfg.stagnation_window > 0 && flat_run >= cfg.stagnation_window) {
      result.trace.stop = OctStop::stagnated;
      break;
    }
  }
  result.field = std::move(field);
  return result;
}

}  // namespace detail

inline OctResult optimize_gate(const EigenBasis& basis, const TargetSet& targets, const OctConfig& cfg,
                               const ControlField& guess) {
  if (targets.size() > basis.size()) throw ConfigError("optimize_gate: gate larger than dynamical basis");
  if (cfg.functional == Functional::probability && !targets.superposition) {
    throw ConfigError("optimize_gate: functional P needs the superposition target");
  }
  TargetSet used = targets;
  // The trace functional is phase sensitive on its own.
  if (cfg.functional == Functional::fidelity) used.superposition = false;
  const std::size_t d = basis.size();
  detail::AmplitudeModel model(basis, used.initial_states(d), used.target_states(d), cfg.functional,
                               used.size());
  return detail::run_monotonic(model, guess, cfg);
}

inline OctResult optimize_gate(const EigenBasis& basis, const TargetSet& targets, const OctConfig& cfg) {
  return optimize_gate(basis, targets, cfg, make_guess_field(basis, cfg));
}

/// Drives chi_0 to the target amplitudes; the figure of merit is the
/// population overlap |<target|psi(T)>|^2.
inline OctResult optimize_state_prep(const EigenBasis& basis, const QubitAmplitudes& target,
                                     const OctConfig& cfg, const ControlField& guess) {
  const double norm = target.c.squaredNorm();
  if (std::abs(norm - 1.0) > 1e-10) throw ConfigError("optimize_state_prep: target not normalized");
  const std::size_t d = basis.size();
  Eigen::MatrixXcd init = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), 1);
  init(0, 0) = 1.0;
  Eigen::MatrixXcd goal(static_cast<Eigen::Index>(d), 1);
  goal.col(0) = embed(target.c, d);
  OctConfig single = cfg;
  single.functional = Functional::probability;
  single.include_superposition_target = true;
  detail::AmplitudeModel model(basis, init, goal, Functional::probability, 1);
  return detail::run_monotonic(model, guess, single);
}

inline OctResult optimize_state_prep(const EigenBasis& basis, const QubitAmplitudes& target,
                                     const OctConfig& cfg) {
  return optimize_state_prep(basis, target, cfg, make_guess_field(basis, cfg));
}

inline OctResult optimize_gate_dissipative(const EigenBasis& basis, const TargetSet& targets,
                                           const OctConfig& cfg, const DissipationModel& diss,
                                           const ControlField& guess) {
  if (targets.size() > basis.size()) throw ConfigError("optimize_gate_dissipative: gate too large");
  if (diss.rates.size() != 0 && diss.rates.rows() != static_cast<Eigen::Index>(basis.size())) {
    throw ConfigError("optimize_gate_dissipative: dissipation model built for a different basis");
  }
  if (cfg.functional == Functional::probability && !targets.superposition) {
    throw ConfigError("optimize_gate_dissipative: functional P needs the superposition target");
  }
  TargetSet used = targets;
  if (cfg.functional == Functional::fidelity) used.superposition = false;
  detail::OperatorModel model(basis, used, cfg.functional, diss);
  return detail::run_monotonic(model, guess, cfg);
}

inline OctResult optimize_gate_dissipative(const EigenBasis& basis, const TargetSet& targets,
                                           const OctConfig& cfg, const DissipationModel& diss) {
  return optimize_gate_dissipative(basis, targets, cfg, diss, make_guess_field(basis, cfg));
}

/// max_j |arg<U_s j|U_P j> - arg<U_s 0|U_P 0>|, wrapped to [0, pi].
inline double phase_spread(const GateMatrix& target, const GateMatrix& realized) {
  if (target.size() != realized.size()) throw ConfigError("phase_spread: size mismatch");
  const Eigen::Index n = target.entries.cols();
  const double ref = std::arg(target.entries.col(0).dot(realized.entries.col(0)));
  double worst = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    double diff = std::arg(target.entries.col(j).dot(realized.entries.col(j))) - ref;
    diff = std::remainder(diff, 2.0 * std::numbers::pi);
    worst = std::max(worst, std::abs(diff));
  }
  return worst;
}

}  // namespace iontrap
