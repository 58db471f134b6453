#pragma once

// Post-processing of fields and pulse sequences: spectra, band-pass filtering,
// mean positions, fidelity decay and periodicity of simulated trajectories.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <set>
#include <thread>
#include <utility>
#include <vector>

#include "iontrap/channel.hpp"
#include "iontrap/encoder.hpp"
#include "iontrap/error.hpp"
#include "iontrap/fft.hpp"
#include "iontrap/field.hpp"
#include "iontrap/gridsim.hpp"
#include "iontrap/propagator.hpp"
#include "iontrap/trap.hpp"
#include "iontrap/units.hpp"

namespace iontrap {

struct Spectrum {
  std::vector<double> frequencies;  // Hz, bins 0 .. L/2
  std::vector<double> power;        // normalized to peak 1
  std::vector<double> raw_power;    // w_k |S_k|^2, S_k = dt * DFT(E)_k, a.u.
  double bin_width = 0.0;           // Hz
  double bin_width_au = 0.0;        // 1 / (L dt), cycles per a.u. of time
  std::vector<std::size_t> peaks;   // indices of local maxima above the threshold

  /// sum_k w_k |S_k|^2 dnu, equal to sum_i E_i^2 dt.
  double parseval_sum() const {
    double s = 0.0;
    for (double p : raw_power) s += p;
    return s * bin_width_au;
  }

  std::vector<double> peak_frequencies() const {
    std::vector<double> out;
    for (auto k : peaks) out.push_back(frequencies[k]);
    return out;
  }
};

inline Spectrum spectrum(const ControlField& field, double threshold = 1e-2) {
  field.validate();
  const std::size_t len = field.samples.size();
  std::vector<cplx> data(field.samples.begin(), field.samples.end());
  FftPlan plan(len);
  plan.forward(data);

  Spectrum s;
  const std::size_t half = len / 2;
  s.bin_width_au = 1.0 / (static_cast<double>(len) * field.dt);
  s.bin_width = s.bin_width_au / units::kTimeSeconds;
  s.frequencies.resize(half + 1);
  s.raw_power.resize(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    const bool self_paired = k == 0 || (len % 2 == 0 && k == half);
    const double w = self_paired ? 1.0 : 2.0;
    s.frequencies[k] = static_cast<double>(k) * s.bin_width;
    s.raw_power[k] = w * std::norm(data[k] * field.dt);
  }
  const double top = *std::max_element(s.raw_power.begin(), s.raw_power.end());
  s.power.resize(half + 1, 0.0);
  if (top > 0.0) {
    for (std::size_t k = 0; k <= half; ++k) s.power[k] = s.raw_power[k] / top;
    for (std::size_t k = 1; k + 1 <= half; ++k) {
      if (s.power[k] > s.power[k - 1] && s.power[k] >= s.power[k + 1] && s.power[k] >= threshold) {
        s.peaks.push_back(k);
      }
    }
  }
  return s;
}

/// Transition frequencies (Hz) for the given index deltas below `limit`.
inline std::vector<double> line_frequencies(const EigenBasis& basis, const std::set<int>& deltas,
                                            std::size_t limit = 0) {
  std::vector<double> out;
  for (const auto& t : transition_table(basis, deltas, limit)) out.push_back(t.frequency_hz);
  return out;
}

/// Distance (in bins) from each peak to the nearest of `lines`.
inline std::vector<double> peak_offsets(const Spectrum& s, const std::vector<double>& lines) {
  std::vector<double> out;
  for (double f : s.peak_frequencies()) {
    double best = std::numeric_limits<double>::infinity();
    for (double l : lines) best = std::min(best, std::abs(f - l));
    out.push_back(best / s.bin_width);
  }
  return out;
}

struct Band {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

/// [0.5 MHz, 1.05 x the highest Delta nu = 3 line among the computational states].
inline Band default_filter_band(const EigenBasis& basis) {
  const auto lines = line_frequencies(basis, {3});
  if (lines.empty()) throw ConfigError("default_filter_band: need at least four computational states");
  return {0.5e6, 1.05 * *std::max_element(lines.begin(), lines.end())};
}

/// Orthogonal projection onto fields that are band-limited to `band` and vanish
/// at both endpoints. Applying it twice is the same as applying it once.
inline ControlField bandpass_filter(const ControlField& field, Band band) {
  field.validate();
  const std::size_t len = field.samples.size();
  const double nyquist = 0.5 / (field.dt * units::kTimeSeconds);
  if (band.lo_hz < 0.0 || band.hi_hz > nyquist * (1.0 + 1e-12)) {
    throw ConfigError("bandpass_filter: band must lie within [0, Nyquist]");
  }
  ControlField out = field;
  if (!(band.hi_hz > band.lo_hz)) {
    std::fill(out.samples.begin(), out.samples.end(), 0.0);
    return out;
  }
  const double bin = 1.0 / (static_cast<double>(len) * field.dt * units::kTimeSeconds);
  std::vector<char> keep(len, 0);
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t m = std::min(k, len - k);
    const double f = static_cast<double>(m) * bin;
    keep[k] = f >= band.lo_hz && f <= band.hi_hz;
  }
  FftPlan plan(len);
  auto project = [&](std::vector<cplx> v) {
    plan.forward(v);
    for (std::size_t k = 0; k < len; ++k) v[k] = keep[k] ? v[k] / static_cast<double>(len) : cplx{};
    plan.backward(v);
    Eigen::VectorXd r(static_cast<Eigen::Index>(len));
    for (std::size_t k = 0; k < len; ++k) r[static_cast<Eigen::Index>(k)] = v[k].real();
    return r;
  };

  const Eigen::VectorXd y = project(std::vector<cplx>(field.samples.begin(), field.samples.end()));
  std::vector<cplx> e0(len, cplx{}), e1(len, cplx{});
  e0.front() = 1.0;
  e1.back() = 1.0;
  Eigen::MatrixXd b(static_cast<Eigen::Index>(len), 2);
  b.col(0) = project(e0);
  b.col(1) = project(e1);
  const Eigen::Index last = b.rows() - 1;
  Eigen::Matrix2d g;
  g << b(0, 0), b(0, 1), b(last, 0), b(last, 1);
  const Eigen::Vector2d rhs(y(0), y(last));
  const Eigen::Vector2d coef = g.completeOrthogonalDecomposition().solve(rhs);
  const Eigen::VectorXd q = y - b * coef;
  for (std::size_t k = 0; k < len; ++k) out.samples[k] = q[static_cast<Eigen::Index>(k)];
  out.samples.front() = 0.0;
  out.samples.back() = 0.0;
  return out;
}

/// <z> = Tr(rho z) with interaction-picture phases restored at time t.
inline double mean_position_ion(const Eigen::VectorXcd& c, const EigenBasis& basis, double t = 0.0) {
  const Eigen::VectorXcd full = embed(c, basis.size());
  const Eigen::VectorXcd s = InteractionFrame(basis).to_schroedinger(full, t);
  return (s.adjoint() * basis.z_matrix.cast<cplx>() * s)(0, 0).real();
}

inline double mean_position_ion(const Eigen::MatrixXcd& rho, const EigenBasis& basis, double t = 0.0) {
  const auto d = static_cast<Eigen::Index>(basis.size());
  if (rho.rows() != d || rho.cols() != d) throw ConfigError("mean_position_ion: dimension mismatch");
  const Eigen::VectorXcd p = InteractionFrame(basis).phases(-t);
  const Eigen::MatrixXcd s = p.asDiagonal() * rho * p.conjugate().asDiagonal();
  return (s * basis.z_matrix.cast<cplx>()).trace().real();
}

/// <x> = sum_j x_j |psi(x_j)|^2 dx from decoded probabilities.
inline double mean_position_sim(const std::vector<double>& probs, const Grid& grid) {
  if (probs.size() != grid.n) throw ConfigError("mean_position_sim: probability count does not match grid");
  double s = 0.0;
  for (std::size_t j = 0; j < grid.n; ++j) s += grid.points[j] * probs[j] * grid.delta_x;
  return s;
}

/// max over l = 0..4 of || p_l - p_{10-l} ||_max on grid-point probabilities.
inline double periodicity_residual(const std::vector<std::vector<double>>& probs) {
  if (probs.size() != 11) throw ConfigError("periodicity_residual: need the 11 snapshots of a 10-pulse run");
  double worst = 0.0;
  for (std::size_t l = 0; l <= 4; ++l) {
    const auto& a = probs[l];
    const auto& b = probs[10 - l];
    if (a.size() != b.size()) throw ConfigError("periodicity_residual: ragged snapshots");
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  }
  return worst;
}

/// Number of worker threads for parallel trajectory batches (0: hardware).
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Propagates the operators through `pulses` repetitions of the field. The
/// interaction-picture clock restarts at every pulse. Work is split over threads.
inline std::vector<std::vector<Eigen::MatrixXcd>> operator_sequence(
    const std::vector<Eigen::MatrixXcd>& ops, const ControlField& field, const EigenBasis& basis,
    const DissipationModel& diss, std::size_t pulses, std::size_t threads = 1) {
  const std::size_t workers = std::min(resolve_threads(threads), std::max<std::size_t>(ops.size(), 1));
  std::vector<std::vector<Eigen::MatrixXcd>> out(pulses + 1);
  out[0] = ops;
  std::vector<Eigen::MatrixXcd> current = ops;
  for (std::size_t l = 1; l <= pulses; ++l) {
    std::vector<std::vector<Eigen::MatrixXcd>> chunks(workers);
    for (std::size_t i = 0; i < current.size(); ++i) chunks[i % workers].push_back(current[i]);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          chunks[w] = propagate_operators(std::move(chunks[w]), field, basis, diss);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    try {
      chunks[0] = propagate_operators(std::move(chunks[0]), field, basis, diss);
    } catch (...) {
      errors[0] = std::current_exception();
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (std::size_t i = 0; i < current.size(); ++i) current[i] = chunks[i % workers][i / workers];
    out[l] = current;
  }
  return out;
}

/// Fidelity of the cumulative Lindblad map after pulses 1..N_p against U_s^l.
inline std::vector<double> fidelity_trace(const ControlField& field, const EigenBasis& basis,
                                          const DissipationModel& diss, const GateMatrix& gate,
                                          std::size_t pulses, std::size_t threads = 1) {
  const std::size_t n = gate.size();
  if (n > basis.size()) throw ConfigError("fidelity_trace: gate larger than the dynamical basis");
  const auto seq = operator_sequence(coherence_basis(n, basis.size()), field, basis, diss, pulses, threads);
  std::vector<double> out;
  Eigen::MatrixXcd target = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t l = 1; l <= pulses; ++l) {
    target = gate.entries * target;
    out.push_back(channel_fidelity(seq[l], target));
  }
  return out;
}

/// Amplitudes after each of 0..N_p pulses of closed dynamics.
inline std::vector<Eigen::VectorXcd> pulse_sequence(const Eigen::VectorXcd& c0, const ControlField& field,
                                                    const EigenBasis& basis, std::size_t pulses) {
  std::vector<Eigen::VectorXcd> out{embed(c0, basis.size())};
  for (std::size_t l = 0; l < pulses; ++l) {
    Eigen::MatrixXcd c = out.back();
    out.emplace_back(propagate_amplitudes(c, field, basis).col(0));
  }
  return out;
}

/// Density matrices after each of 0..N_p pulses of Lindblad dynamics.
inline std::vector<Eigen::MatrixXcd> pulse_sequence(const Eigen::MatrixXcd& rho0, const ControlField& field,
                                                    const EigenBasis& basis, const DissipationModel& diss,
                                                    std::size_t pulses) {
  std::vector<Eigen::MatrixXcd> out{rho0};
  PropagationOptions opts;
  opts.record_every = field.intervals();
  for (std::size_t l = 0; l < pulses; ++l) {
    out.push_back(propagate_lindblad(out.back(), field, basis, diss, opts).states.back());
  }
  return out;
}

/// Decoded localization probabilities of the first N ion states.
inline std::vector<double> decoded_probabilities(const std::vector<double>& populations, double delta_x) {
  std::vector<double> out(populations.size());
  for (std::size_t j = 0; j < populations.size(); ++j) out[j] = populations[j] / delta_x;
  return out;
}

}  // namespace iontrap
