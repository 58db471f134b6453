// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// values and pinned tolerances printed above it.
//
//   acceptance [--only K] [--cache DIR] [--paper DIR]
//
// Exit status 0 when every selected criterion passes, 1 otherwise, 77 when
// the only selected criterion was not run.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "iontrap/analysis.hpp"
#include "iontrap/config.hpp"
#include "iontrap/encoder.hpp"
#include "iontrap/gridsim.hpp"
#include "iontrap/io.hpp"
#include "iontrap/oct.hpp"
#include "iontrap/propagator.hpp"
#include "iontrap/trap.hpp"
#include "iontrap/units.hpp"

using namespace iontrap;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kNotRun = 77;

// Tolerances.
constexpr double kOmegaHz = 2.77e6;
constexpr double kOmegaRel = 1e-3;
constexpr double kPerturbationRel = 1e-2;
constexpr std::size_t kPerturbationMaxN = 8;
constexpr double kDipoleRel = 1e-8;
constexpr double kUnitarity = 1e-10;
constexpr double kPeriodicity = 2e-3;
constexpr double kFullPeriod = 1e-3;
constexpr double kRoundTrip = 1e-12;
constexpr double kZMean = 114.8;
constexpr double kZMeanRel = 0.05;
constexpr double kRabiRel = 1e-3;
constexpr double kNormDrift = 1e-8;
constexpr double kTraceErr = 1e-8;
constexpr double kHermErr = 1e-10;
constexpr double kMinEig = -1e-8;
constexpr double kClosedLimit = 1e-8;
constexpr double kStepHalving = 1e-6;
constexpr double kHeating5Ms = 55.0;
constexpr double kHeating1Ms = 110.0;
constexpr double kHeatingRel = 0.10;
constexpr double kDeskGoal = 0.99;
constexpr std::size_t kDeskBudget = 500;
constexpr double kPhaseSpread = 0.2;
constexpr double kOctClosedLimit = 1e-6;
constexpr double kPeakBins = 1.0;
constexpr std::size_t kGuessLines = 28;
constexpr double kIdempotent = 1e-12;
constexpr double kPaperGoal = 0.999;
constexpr std::size_t kPaperBudget = 1500;
constexpr double kPaperDissipativeGoal = 0.995;

struct Check {
  std::string name;
  double value;
  std::string relation;  // "<=", ">=", "=="
  double limit;

  bool pass() const {
    if (!std::isfinite(value)) return false;
    if (relation == "<=") return value <= limit;
    if (relation == ">=") return value >= limit;
    return value == limit;
  }
};

struct Outcome {
  std::vector<Check> checks;
  bool ran = true;
  std::string note;

  void add(std::string name, double value, std::string relation, double limit) {
    checks.push_back({std::move(name), value, std::move(relation), limit});
  }
  bool pass() const {
    for (const auto& c : checks) {
      if (!c.pass()) return false;
    }
    return ran;
  }
};

struct Options {
  fs::path cache;
  fs::path paper;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_rel_diff(const ControlField& a, const ControlField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) d = std::max(d, std::abs(a.samples[i] - b.samples[i]));
  return d / std::max(a.peak(), 1e-300);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

GateMatrix desk_gate(const RunConfig& cfg) {
  return elementary_gate(cfg.system(), cfg.grid(), cfg.delta_t, cfg.k_steps);
}

// -- 1 ---------------------------------------------------------------------

Outcome trap_physics(const Options&) {
  Outcome out;
  const TrapParams p;
  const EigenBasis b = solve_trap(p);
  const double nu = units::angular_au_to_hz(b.omega);
  out.add("trap frequency (Hz) rel. error vs 2.77 MHz", std::abs(nu - kOmegaHz) / kOmegaHz, "<=", kOmegaRel);

  const double x0 = std::sqrt(1.0 / (2.0 * p.mass * b.omega));
  double worst = 0.0;
  for (std::size_t n = 0; n <= kPerturbationMaxN; ++n) {
    const double nn = static_cast<double>(n);
    const double first = b.omega * (nn + 0.5) +
                         p.charge * p.k_quart / 24.0 * 3.0 * std::pow(x0, 4) * (2.0 * nn * nn + 2.0 * nn + 1.0);
    const double e = b.energies(static_cast<Eigen::Index>(n));
    worst = std::max(worst, std::abs(first - e) / e);
  }
  out.add("first-order perturbation energies, worst rel. error n<=8", worst, "<=", kPerturbationRel);

  TrapParams h = p;
  h.k_quart = 0.0;
  const EigenBasis hb = solve_trap(h);
  const double mu01 = std::abs(hb.dipole(0, 1));
  const double analytic = h.charge * std::sqrt(1.0 / (2.0 * h.mass * hb.omega));
  out.add("harmonic mu01 rel. error vs q sqrt(1/(2 m w))", std::abs(mu01 - analytic) / analytic, "<=", kDipoleRel);
  return out;
}

// -- 2 ---------------------------------------------------------------------

Outcome gate_construction(const Options&) {
  Outcome out;
  const RunConfig cfg = RunConfig::paper();
  const Grid g = cfg.grid();
  const SimSystem sys = cfg.system();
  const GateMatrix gate = elementary_gate(sys, g, kTwoPi / 10.0, 10);
  out.add("unitarity deviation of U_s(2 pi/10), K=10", gate.unitarity_deviation(), "<=", kUnitarity);

  const auto traj = classic_propagate(gaussian_packet(g, 1.0, -0.75), gate, 10);
  std::vector<std::vector<double>> probs;
  for (const auto& w : traj) probs.push_back(w.probabilities());
  out.add("periodicity residual l <-> 10-l (grid-point probabilities)", periodicity_residual(probs), "<=",
          kPeriodicity);

  const Grid fine = make_grid(cfg.x_min, cfg.x_max, 64);
  const GridWavepacket psi0 = gaussian_packet(fine, 1.0, -0.75);
  GridWavepacket psi = psi0;
  for (int s = 0; s < 100; ++s) psi = split_step(psi, sys, kTwoPi / 100.0);
  out.add("N=64 full period, max |p - p0| (grid-point probabilities)",
          max_abs_diff(psi.probabilities(), psi0.probabilities()), "<=", kFullPeriod);
  return out;
}

// -- 3 ---------------------------------------------------------------------

Outcome encoding(const Options&) {
  Outcome out;
  const RunConfig cfg = RunConfig::paper();
  const Grid g = cfg.grid();
  const GridWavepacket psi = gaussian_packet(g, 1.0, -0.75);
  const QubitAmplitudes a = encode(psi);
  const GridWavepacket back = to_wavepacket(a, g);
  double err = 0.0;
  for (std::size_t j = 0; j < g.n; ++j) err = std::max(err, std::abs(back.amplitudes[j] - psi.amplitudes[j]));
  const auto dec = decode(a);
  err = std::max(err, max_abs_diff(dec, psi.density()));
  out.add("encode/decode round trip", err, "<=", kRoundTrip);

  const EigenBasis b = solve_trap(cfg.trap);
  const double z = mean_position_ion(a.c, b);
  out.add("|<z>| of encoded sigma=1, x0=-0.75 packet (a.u.) rel. error vs 114.8",
          std::abs(std::abs(z) - kZMean) / kZMean, "<=", kZMeanRel);
  std::printf("    <z> = %.6f a.u. (%.4f nm)\n", z, units::au_to_nm(z));
  return out;
}

// -- 4 ---------------------------------------------------------------------

Outcome propagators(const Options&) {
  Outcome out;
  const RunConfig cfg = RunConfig::desk();
  const EigenBasis b = solve_trap(cfg.trap);
  const OctConfig oct = cfg.oct_for(Functional::probability);
  const ControlField guess = make_guess_field(b, oct, cfg.guess_amplitude);
  const auto d = static_cast<Eigen::Index>(b.size());

  Eigen::VectorXcd c0(d);
  for (Eigen::Index j = 0; j < d; ++j) c0(j) = cplx{1.0 + 0.1 * j, 0.3 * j} / (1.0 + j);
  c0.normalize();

  const ControlField zero = ControlField::zeros(oct.t_pulse, oct.dt);
  const double zero_change = (propagate_tdse(c0, zero, b).states.back() - c0).cwiseAbs().maxCoeff();
  out.add("zero field: max |c(T) - c(0)|", zero_change, "<=", 0.0);

  {
    const EigenBasis two = solve_trap(TrapParams{}).truncated(2);
    const double w = two.angular_frequency(0, 1);
    const double rabi = 2e-4 * w;
    const double e0 = rabi / std::abs(two.dipole(0, 1));
    const double quarter = std::numbers::pi / (2.0 * rabi);
    const double dt = kTwoPi / w / 200.0;
    const auto n = static_cast<std::size_t>(1.2 * quarter / dt);
    ControlField f{std::vector<double>(n + 1), dt};
    for (std::size_t i = 0; i <= n; ++i) f.samples[i] = e0 * std::cos(w * f.time(i));
    const auto traj = propagate_tdse(Eigen::VectorXcd::Unit(2, 0), f, two);
    double crossing = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
      const double p0 = std::norm(traj.states[i - 1](1)) - 0.5;
      const double p1 = std::norm(traj.states[i](1)) - 0.5;
      if (p0 < 0.0 && p1 >= 0.0) {
        crossing = traj.times[i - 1] + (traj.times[i] - traj.times[i - 1]) * (-p0) / (p1 - p0);
        break;
      }
    }
    out.add("Rabi: quarter-period crossing rel. error", std::abs(crossing / quarter - 1.0), "<=", kRabiRel);
  }

  const auto closed = propagate_tdse(c0, guess, b);
  out.add("TDSE norm drift over a pulse", std::abs(closed.states.back().squaredNorm() - 1.0), "<=", kNormDrift);

  {
    const DissipationModel diss = build_dissipation(b, 1e-14);
    PropagationOptions opts;
    opts.record_every = 100;
    opts.check_invariants = false;
    const auto traj = propagate_lindblad(c0 * c0.adjoint(), guess, b, diss, opts);
    double tr = 0.0, herm = 0.0, eig = 0.0;
    for (const auto& rho : traj.states) {
      const DensityChecks c = inspect_density(rho);
      tr = std::max(tr, c.trace_error);
      herm = std::max(herm, c.hermiticity_error);
      eig = std::min(eig, c.min_eigenvalue);
    }
    out.add("Lindblad (kappa=1e-14) trace error", tr, "<=", kTraceErr);
    out.add("Lindblad hermiticity error", herm, "<=", kHermErr);
    out.add("Lindblad minimum eigenvalue", eig, ">=", kMinEig);
  }

  {
    const auto open = propagate_lindblad(c0 * c0.adjoint(), guess, b, build_dissipation(b, 0.0));
    const Eigen::VectorXcd& c = closed.states.back();
    out.add("kappa=0 Lindblad vs TDSE outer product", (open.states.back() - c * c.adjoint()).cwiseAbs().maxCoeff(),
            "<=", kClosedLimit);
  }

  {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    const Eigen::MatrixXcd one = propagate_amplitudes(id, guess, b, 1);
    const Eigen::MatrixXcd two = propagate_amplitudes(id, guess, b, 2);
    out.add("RK4 step halving, max amplitude change", (one - two).cwiseAbs().maxCoeff(), "<=", kStepHalving);
  }
  return out;
}

// -- 5 ---------------------------------------------------------------------

Outcome dissipation(const Options&) {
  Outcome out;
  const RunConfig cfg = RunConfig::paper();
  const EigenBasis b = solve_trap(cfg.trap);
  const double t5 = units::au_to_seconds(build_dissipation(b, 5e-18, cfg.dissipation).mean_heating_time()) * 1e3;
  const double t1 = units::au_to_seconds(build_dissipation(b, 1e-18, cfg.dissipation).mean_heating_time()) * 1e3;
  std::printf("    heating time: %.3f ms at kappa=5e-18, %.3f ms at kappa=1e-18\n", t5, t1);
  out.add("heating time at kappa=5e-18 rel. error vs 55 ms", std::abs(t5 - kHeating5Ms) / kHeating5Ms, "<=",
          kHeatingRel);
  out.add("heating time at kappa=1e-18 rel. error vs 110 ms", std::abs(t1 - kHeating1Ms) / kHeating1Ms, "<=",
          kHeatingRel);
  return out;
}

// -- 6 and 7 ---------------------------------------------------------------

struct DeskRun {
  OctResult result;
  double phase = 0.0;
};

DeskRun run_desk(const RunConfig& cfg, const EigenBasis& b, Functional f) {
  OctConfig oct = cfg.oct_for(f);
  oct.max_iterations = kDeskBudget;
  oct.fidelity_goal = kDeskGoal;
  const GateMatrix gate = desk_gate(cfg);
  DeskRun run;
  run.result = optimize_gate(b, TargetSet::for_gate(gate, true), oct, make_guess_field(b, oct, cfg.guess_amplitude));
  run.phase = phase_spread(gate, evolution_operator(run.result.field, b, gate.size()));
  return run;
}

fs::path cached_field(const Options& o, const RunConfig& cfg) {
  return o.cache.empty() ? fs::path{} : o.cache / ("desk_field_P_" + cfg.hash() + ".csv");
}

Outcome oct_desk(const Options& o) {
  Outcome out;
  const RunConfig cfg = RunConfig::desk();
  const EigenBasis b = solve_trap(cfg.trap);
  for (Functional f : {Functional::probability, Functional::fidelity}) {
    const std::string tag = std::string("J_") + to_string(f);
    const DeskRun run = run_desk(cfg, b, f);
    const auto& recs = run.result.trace.records;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < recs.size(); ++i) worst = std::min(worst, recs[i].objective - recs[i - 1].objective);
    out.add(tag + ": smallest per-iteration change of J", worst, ">=", 0.0);
    out.add(tag + ": final fidelity", run.result.trace.last().fidelity, ">=", kDeskGoal);
    out.add(tag + ": iterations used", static_cast<double>(run.result.trace.last().iteration), "<=",
            static_cast<double>(kDeskBudget));
    out.add(tag + ": common-phase spread (rad)", run.phase, "<=", kPhaseSpread);
    if (f == Functional::probability && !o.cache.empty()) {
      fs::create_directories(o.cache);
      io::save_field(run.result.field, cached_field(o, cfg), cfg.hash(),
                     static_cast<long>(run.result.trace.last().iteration));
    }
  }

  // Closed-system limit of the dissipative optimizer: two iterations at half
  // the desk step, where the RK4 gap between rho and psi propagation is small.
  RunConfig fine = cfg;
  fine.oct.dt = cfg.oct.dt / 2.0;
  const GateMatrix gate = desk_gate(fine);
  const TargetSet targets = TargetSet::for_gate(gate, true);
  for (Functional f : {Functional::probability, Functional::fidelity}) {
    const std::string tag = std::string("J_") + to_string(f);
    OctConfig oct = fine.oct_for(f);
    oct.max_iterations = 2;
    const ControlField guess = make_guess_field(b, oct, fine.guess_amplitude);
    const OctResult closed = optimize_gate(b, targets, oct, guess);
    const OctResult open = optimize_gate_dissipative(b, targets, oct, build_dissipation(b, 0.0), guess);
    double dj = 0.0, df = 0.0;
    for (std::size_t i = 0; i < closed.trace.records.size(); ++i) {
      const auto& c = closed.trace.records[i];
      const auto& p = open.trace.records[i];
      dj = std::max(dj, std::abs(c.objective - p.objective) / std::abs(c.objective));
      df = std::max(df, std::abs(c.fidelity - p.fidelity));
    }
    out.add(tag + ": kappa=0 vs closed, rel. objective gap", dj, "<=", kOctClosedLimit);
    out.add(tag + ": kappa=0 vs closed, fidelity gap", df, "<=", kOctClosedLimit);
    out.add(tag + ": kappa=0 vs closed, rel. field gap", max_rel_diff(closed.field, open.field), "<=",
            kOctClosedLimit);
  }
  return out;
}

Outcome spectra(const Options& o) {
  Outcome out;
  const RunConfig cfg = RunConfig::desk();
  const EigenBasis b = solve_trap(cfg.trap);
  ControlField field;
  const fs::path cache = cached_field(o, cfg);
  if (!cache.empty() && fs::exists(cache)) {
    field = io::load_field(cache).field;
    std::printf("    converged J_P field from %s\n", cache.c_str());
  } else {
    field = run_desk(cfg, b, Functional::probability).result.field;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Spectrum s = spectrum(field);
  const auto offsets = peak_offsets(s, line_frequencies(b, {1, 3}, b.size()));
  double worst = 0.0;
  for (double off : offsets) worst = std::max(worst, off);
  std::printf("    converged field: %zu peaks above 1%%, bin width %.1f Hz\n", offsets.size(), s.bin_width);
  out.add("converged desk field: worst peak offset from nearest line (bins)", worst, "<=", kPeakBins);

  const EigenBasis pb = solve_trap(TrapParams{});
  const RunConfig paper = RunConfig::paper();
  const ControlField guess = make_guess_field(pb, paper.oct_for(Functional::probability), paper.guess_amplitude);
  const Spectrum gs = spectrum(guess);
  out.add("paper guess field: spectral lines", static_cast<double>(gs.peaks.size()), "==",
          static_cast<double>(kGuessLines));
  double gworst = 0.0;
  for (double off : peak_offsets(gs, line_frequencies(pb, {1, 3}))) gworst = std::max(gworst, off);
  out.add("paper guess field: worst peak offset (bins)", gworst, "<=", kPeakBins);

  const Band band = default_filter_band(b);
  const ControlField once = bandpass_filter(field, band);
  const ControlField twice = bandpass_filter(once, band);
  out.add("bandpass idempotence, rel. max change", max_rel_diff(once, twice), "<=", kIdempotent);
  std::printf("    spectral checks took %.2f s\n", seconds_since(t0));
  return out;
}

// -- 8 ---------------------------------------------------------------------

Outcome paper_tier(const Options& o) {
  Outcome out;
  if (o.paper.empty()) {
    out.ran = false;
    out.note = "pass --paper DIR with the output of tools/reproduce_paper.sh";
    return out;
  }
  auto summary = [&](const std::string& name) {
    const fs::path p = o.paper / name;
    if (!fs::exists(p)) throw ConfigError("missing " + p.string());
    return nlohmann::json::parse(io::read_text(p));
  };
  for (const char* f : {"P", "F"}) {
    const auto closed = summary(std::string("summary_gate_") + f + ".json");
    out.add(std::string("paper J_") + f + " fidelity", closed.at("fidelity").get<double>(), ">=", kPaperGoal);
    out.add(std::string("paper J_") + f + " iterations", closed.at("iterations").get<double>(), "<=",
            static_cast<double>(kPaperBudget));
  }
  const auto open = summary("summary_gate_P_kappa1e-18.json");
  out.add("paper dissipative (kappa=1e-18) fidelity", open.at("fidelity").get<double>(), ">=",
          kPaperDissipativeGoal);
  return out;
}

struct Criterion {
  int id;
  const char* title;
  double runtime_target;  // seconds
  std::function<Outcome(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  Options opts;
  std::string cache, paper;
  app.add_option("--only", only, "run a single criterion (1-8)");
  app.add_option("--cache", cache, "directory for the converged desk field shared by criteria 6 and 7");
  app.add_option("--paper", paper, "output directory of a paper-tier run");
  CLI11_PARSE(app, argc, argv);
  opts.cache = cache;
  opts.paper = paper;

  const std::vector<Criterion> criteria = {
      {1, "trap physics", 1.0, trap_physics},
      {2, "gate construction", 5.0, gate_construction},
      {3, "encoding", 1.0, encoding},
      {4, "propagators", 30.0, propagators},
      {5, "dissipation calibration", 1.0, dissipation},
      {6, "OCT desk scale", 600.0, oct_desk},
      {7, "field realism and spectra", 10.0, spectra},
      {8, "paper tier", 0.0, paper_tier},
  };

  diag::set_warning_handler([](const std::string&) {});
  bool all = true;
  bool any_ran = false;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = c.run(opts);
    } catch (const std::exception& e) {
      r.add(std::string("exception: ") + e.what(), std::numeric_limits<double>::quiet_NaN(), "<=", 0.0);
    }
    const double elapsed = seconds_since(t0);
    for (const auto& k : r.checks) {
      std::printf("    [%s] %s: %.6g (%s %.6g)\n", k.pass() ? "ok" : "x", k.name.c_str(), k.value,
                  k.relation.c_str(), k.limit);
    }
    if (!r.ran) {
      std::printf("NOT RUN  criterion %d: %s (%s)\n", c.id, c.title, r.note.c_str());
      continue;
    }
    any_ran = true;
    const bool in_time = c.runtime_target <= 0.0 || elapsed <= c.runtime_target;
    if (!in_time) std::printf("    [x] runtime %.1f s exceeds %.0f s\n", elapsed, c.runtime_target);
    const bool ok = r.pass() && in_time;
    all = all && ok;
    std::printf("%s criterion %d: %s [%.1f s]\n", ok ? "PASS   " : "FAIL   ", c.id, c.title, elapsed);
    std::fflush(stdout);
  }
  if (!any_ran) return kNotRun;
  return all ? 0 : 1;
}
