// iontrap: command-line driver.
//
//   iontrap trap      eigenbasis of the trap
//   iontrap gate      elementary evolution operator of the simulated system
//   iontrap optimize  control field for the gate (or for state preparation)
//   iontrap simulate  concatenated pulses, closed and dissipative
//   iontrap analyze   spectra, band-pass filtering
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 no convergence within the iteration budget.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "iontrap/analysis.hpp"
#include "iontrap/config.hpp"
#include "iontrap/encoder.hpp"
#include "iontrap/error.hpp"
#include "iontrap/gridsim.hpp"
#include "iontrap/io.hpp"
#include "iontrap/oct.hpp"
#include "iontrap/propagator.hpp"
#include "iontrap/trap.hpp"
#include "iontrap/units.hpp"

namespace fs = std::filesystem;
using namespace iontrap;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNoConvergence = 4;

struct Options {
  std::string config;
  std::string tier;
  std::string out = "out";
  std::string resume;
  std::string kappa;
  bool long_running = false;

  std::string mode = "gate";
  std::string functional = "P";
  bool dissipative = false;
  std::size_t packet = 0;
  std::string field;
};

struct Context {
  RunConfig cfg;
  std::string hash;
  fs::path out;
  std::size_t threads = 1;
};

std::size_t threads_from_env() {
  const char* env = std::getenv("THREADS");
  if (env == nullptr || *env == '\0') return resolve_threads(0);
  try {
    const long n = std::stol(env);
    if (n < 1) throw ConfigError("THREADS must be a positive integer");
    return static_cast<std::size_t>(n);
  } catch (const std::logic_error&) {
    throw ConfigError(std::string("THREADS must be a positive integer, got '") + env + "'");
  }
}

Context make_context(const Options& o) {
  Context ctx;
  ctx.cfg = load_config(o.config, o.tier);
  if (!o.kappa.empty()) ctx.cfg.kappas = parse_kappa_list(o.kappa);
  if (ctx.cfg.tier == "paper" && !o.long_running) {
    throw ConfigError("the paper tier runs for hours; pass --long-running to confirm");
  }
  ctx.hash = ctx.cfg.hash();
  ctx.out = o.out;
  ctx.threads = threads_from_env();
  fs::create_directories(ctx.out);
  io::write_atomic(ctx.out / "config.resolved.json",
                   [&] {
                     auto j = ctx.cfg.to_json();
                     j["config_hash"] = ctx.hash;
                     return j.dump(2) + "\n";
                   }());
  return ctx;
}

Functional parse_functional(const std::string& s) {
  if (s == "F") return Functional::fidelity;
  if (s == "P") return Functional::probability;
  throw ConfigError("--functional must be F or P");
}

std::string kappa_tag(double kappa) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", kappa);
  return buf;
}

std::string sigma_tag(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sigma%g", sigma);
  return buf;
}

GateMatrix build_gate(const RunConfig& cfg) {
  return elementary_gate(cfg.system(), cfg.grid(), cfg.delta_t, cfg.k_steps);
}

QubitAmplitudes packet_amplitudes(const RunConfig& cfg, std::size_t index) {
  if (index >= cfg.packets.size()) throw ConfigError("--packet index out of range");
  const auto& p = cfg.packets[index];
  return encode(gaussian_packet(cfg.grid(), p.sigma, p.x0));
}

// ---------------------------------------------------------------------------

int cmd_trap(const Options& o) {
  const Context ctx = make_context(o);
  const EigenBasis basis = solve_trap(ctx.cfg.trap);
  io::save_basis(basis, ctx.out / "trap", ctx.hash);
  std::printf("omega = %.6e a.u. (%.6f MHz)\n", basis.omega, units::angular_au_to_hz(basis.omega) * 1e-6);
  for (const auto& t : transition_table(basis, {1, 3})) {
    std::printf("  %2zu -> %2zu  %9.5f MHz  mu = %.4f a.u.\n", t.lower, t.upper, t.frequency_hz * 1e-6, t.dipole);
  }
  std::printf("wrote %s\n", (ctx.out / "trap").c_str());
  return kExitOk;
}

int cmd_gate(const Options& o) {
  const Context ctx = make_context(o);
  const GateMatrix gate = build_gate(ctx.cfg);
  io::save_gate(gate, ctx.out / "gate.csv", ctx.hash);
  std::printf("N = %zu, Delta t = %.6g a.u., K = %zu\n", gate.size(), gate.delta_t, gate.steps);
  std::printf("unitarity deviation max|U^dagger U - I| = %.3e\n", gate.unitarity_deviation());
  return kExitOk;
}

int cmd_optimize(const Options& o) {
  const Context ctx = make_context(o);
  const RunConfig& cfg = ctx.cfg;
  if (o.mode != "gate" && o.mode != "prep") throw ConfigError("--mode must be gate or prep");
  const Functional functional = o.mode == "prep" ? Functional::probability : parse_functional(o.functional);
  if (o.dissipative && o.mode == "prep") throw ConfigError("--dissipative applies to gate optimization only");
  if (o.dissipative && o.kappa.empty()) {
    throw ConfigError("--dissipative needs an explicit --kappa value");
  }
  const EigenBasis basis = solve_trap(cfg.trap);
  OctConfig oct = cfg.oct_for(functional);

  std::string tag = o.mode == "prep" ? "prep_" + sigma_tag(cfg.packets.at(o.packet).sigma)
                                     : std::string("gate_") + to_string(functional);
  if (o.dissipative) {
    if (cfg.kappas.size() != 1) throw ConfigError("--dissipative needs exactly one kappa value");
    tag += "_kappa" + kappa_tag(cfg.kappas.front());
  }
  const fs::path field_path = ctx.out / ("field_" + tag + ".csv");
  const fs::path trace_path = ctx.out / ("trace_" + tag + ".csv");

  ControlField guess = make_guess_field(basis, oct, cfg.guess_amplitude);
  std::vector<OctRecord> history;
  if (!o.resume.empty()) {
    const auto loaded = io::load_field(o.resume);
    guess = loaded.field;
    if (loaded.iteration > 0) {
      oct.iteration_offset = static_cast<std::size_t>(loaded.iteration);
      if (fs::exists(trace_path)) {
        for (const auto& r : io::load_trace(trace_path)) {
          if (r.iteration < oct.iteration_offset) history.push_back(r);
        }
      }
    }
    std::printf("resuming from %s at iteration %zu\n", o.resume.c_str(), oct.iteration_offset);
  }

  std::vector<OctRecord> records = history;
  oct.on_iteration = [&](const OctRecord& rec, const ControlField& field) {
    records.push_back(rec);
    std::printf("iter %6zu  J = %.12f  F = %.10f  fluence = %.6e\n", rec.iteration, rec.objective, rec.fidelity,
                rec.fluence);
    std::fflush(stdout);
    if (cfg.checkpoint_every > 0 && rec.iteration % cfg.checkpoint_every == 0) {
      io::save_field(field, field_path, ctx.hash, static_cast<long>(rec.iteration));
      io::save_trace(records, trace_path, ctx.hash);
    }
  };

  OctResult result;
  if (o.mode == "prep") {
    result = optimize_state_prep(basis, packet_amplitudes(cfg, o.packet), oct, guess);
  } else {
    const TargetSet targets = TargetSet::for_gate(build_gate(cfg), true);
    if (o.dissipative) {
      const DissipationModel diss = build_dissipation(basis, cfg.kappas.front(), cfg.dissipation);
      result = optimize_gate_dissipative(basis, targets, oct, diss, guess);
    } else {
      result = optimize_gate(basis, targets, oct, guess);
    }
  }
  const OctRecord& last = result.trace.last();
  io::save_field(result.field, field_path, ctx.hash, static_cast<long>(last.iteration));
  io::save_trace(records, trace_path, ctx.hash);

  json summary;
  summary["config_hash"] = ctx.hash;
  summary["mode"] = o.mode;
  summary["functional"] = to_string(functional);
  summary["kappa"] = o.dissipative ? cfg.kappas.front() : 0.0;
  summary["iterations"] = last.iteration;
  summary["objective"] = last.objective;
  summary["fidelity"] = last.fidelity;
  summary["peak_field_Vpm"] = units::au_to_vpm(result.field.peak());
  summary["stop"] = result.trace.stop == OctStop::goal_reached ? "goal_reached"
                    : result.trace.stop == OctStop::stagnated  ? "stagnated"
                                                               : "max_iterations";
  if (o.mode == "gate" && !o.dissipative) {
    const GateMatrix gate = build_gate(cfg);
    const GateMatrix realized = evolution_operator(result.field, basis, gate.size());
    summary["phase_spread_rad"] = phase_spread(gate, realized);
  }
  io::write_atomic(ctx.out / ("summary_" + tag + ".json"), summary.dump(2) + "\n");
  std::printf("%s: F = %.10f after %zu iterations (%s); wrote %s\n", tag.c_str(), last.fidelity, last.iteration,
              summary["stop"].get<std::string>().c_str(), field_path.c_str());
  return result.trace.stop == OctStop::goal_reached ? kExitOk : kExitNoConvergence;
}

fs::path default_gate_field(const Options& o, const Context& ctx) {
  if (!o.field.empty()) return o.field;
  return ctx.out / ("field_gate_" + o.functional + ".csv");
}

int cmd_simulate(const Options& o) {
  const Context ctx = make_context(o);
  const RunConfig& cfg = ctx.cfg;
  parse_functional(o.functional);
  const fs::path field_path = default_gate_field(o, ctx);
  const ControlField field = io::load_field(field_path).field;
  const EigenBasis basis = solve_trap(cfg.trap);
  const GateMatrix gate = build_gate(cfg);
  const Grid grid = cfg.grid();
  const std::size_t n = gate.size();
  const fs::path dir = ctx.out / "simulate";
  json report;
  report["config_hash"] = ctx.hash;
  report["field"] = field_path.string();
  report["gate_fidelity"] = fidelity(gate, evolution_operator(field, basis, n));

  for (std::size_t p = 0; p < cfg.packets.size(); ++p) {
    const auto& spec = cfg.packets[p];
    const std::string tag = sigma_tag(spec.sigma);
    const GridWavepacket psi0 = gaussian_packet(grid, spec.sigma, spec.x0);
    const QubitAmplitudes amps = encode(psi0);
    Eigen::VectorXcd c0 = embed(amps.c, basis.size());
    const fs::path prep_path = ctx.out / ("field_prep_" + tag + ".csv");
    std::string init = "ideal encoding";
    if (fs::exists(prep_path)) {
      const ControlField prep = io::load_field(prep_path).field;
      Eigen::VectorXcd ground = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
      ground(0) = 1.0;
      c0 = propagate_tdse(ground, prep, basis).states.back();
      init = prep_path.string();
    }
    io::save_amplitudes(amps, dir / ("amplitudes_" + tag + ".csv"), ctx.hash);

    // Reference: the gate applied on the grid.
    const auto classic = classic_propagate(psi0, gate, cfg.pulses);
    std::vector<std::vector<double>> classic_probs, classic_pops;
    std::vector<double> classic_x;
    for (const auto& w : classic) {
      classic_probs.push_back(w.density());
      classic_pops.push_back(w.probabilities());
      classic_x.push_back(mean_position_sim(w.density(), grid));
    }
    io::save_snapshots(classic_probs, grid, dir / ("snapshots_classic_" + tag + ".csv"), ctx.hash);
    io::save_series(classic_x, "x_mean", 0, dir / ("positions_classic_" + tag + ".csv"), ctx.hash);

    // Ion, closed system.
    const auto states = pulse_sequence(c0, field, basis, cfg.pulses);
    std::vector<std::vector<double>> ion_probs, ion_pops;
    std::vector<double> ion_x, ion_z;
    for (const auto& c : states) {
      ion_pops.push_back(populations(c, n));
      ion_probs.push_back(decoded_probabilities(ion_pops.back(), grid.delta_x));
      ion_x.push_back(mean_position_sim(ion_probs.back(), grid));
      ion_z.push_back(mean_position_ion(c, basis));
    }
    io::save_snapshots(ion_probs, grid, dir / ("snapshots_ion_" + tag + ".csv"), ctx.hash);
    io::save_series(ion_x, "x_mean", 0, dir / ("positions_sim_" + tag + ".csv"), ctx.hash);
    io::save_series(ion_z, "z_mean_au", 0, dir / ("positions_ion_" + tag + ".csv"), ctx.hash);

    json entry;
    entry["sigma"] = spec.sigma;
    entry["x0"] = spec.x0;
    entry["initial_state"] = init;
    if (cfg.pulses == 10) {
      entry["periodicity_residual_classic"] = periodicity_residual(classic_pops);
      entry["periodicity_residual_ion"] = periodicity_residual(ion_pops);
    }
    entry["z_mean_initial_au"] = ion_z.front();

    // Ion, dissipative.
    for (double kappa : cfg.kappas) {
      const DissipationModel diss = build_dissipation(basis, kappa, cfg.dissipation);
      const Eigen::MatrixXcd rho0 = c0 * c0.adjoint();
      const auto rhos = pulse_sequence(rho0, field, basis, diss, cfg.pulses);
      std::vector<std::vector<double>> probs, pops;
      std::vector<double> xs, errors;
      for (std::size_t l = 0; l < rhos.size(); ++l) {
        pops.push_back(populations(rhos[l], n));
        probs.push_back(decoded_probabilities(pops.back(), grid.delta_x));
        xs.push_back(mean_position_sim(probs.back(), grid));
        const double ideal = ion_x[l];
        errors.push_back(std::abs(ideal) > 1e-12 ? std::abs(xs.back() - ideal) / std::abs(ideal) : 0.0);
      }
      const std::string ktag = tag + "_kappa" + kappa_tag(kappa);
      io::save_snapshots(probs, grid, dir / ("snapshots_ion_" + ktag + ".csv"), ctx.hash);
      io::save_series(xs, "x_mean", 0, dir / ("positions_sim_" + ktag + ".csv"), ctx.hash);
      json k;
      k["kappa"] = kappa;
      k["heating_time_ms"] = units::au_to_seconds(diss.mean_heating_time()) * 1e3;
      if (cfg.pulses == 10) k["periodicity_residual"] = periodicity_residual(pops);
      k["final_position_error"] = errors.back();
      entry["dissipative"].push_back(k);
    }
    report["packets"].push_back(entry);
  }

  for (double kappa : cfg.kappas) {
    const DissipationModel diss = build_dissipation(basis, kappa, cfg.dissipation);
    const auto trace = fidelity_trace(field, basis, diss, gate, cfg.pulses, ctx.threads);
    io::save_series(trace, "F", 1, dir / ("fidelity_trace_kappa" + kappa_tag(kappa) + ".csv"), ctx.hash);
    std::printf("kappa = %g: heating time %.1f ms, F after %zu pulses = %.6f\n", kappa,
                units::au_to_seconds(diss.mean_heating_time()) * 1e3, cfg.pulses, trace.back());
  }
  io::write_atomic(dir / "report.json", report.dump(2) + "\n");
  std::printf("wrote %s\n", dir.c_str());
  return kExitOk;
}

int cmd_analyze(const Options& o) {
  const Context ctx = make_context(o);
  const RunConfig& cfg = ctx.cfg;
  const EigenBasis basis = solve_trap(cfg.trap);
  const fs::path dir = ctx.out / "analyze";
  const fs::path field_path = default_gate_field(o, ctx);
  const ControlField field = io::load_field(field_path).field;
  const Band band = cfg.filter.value_or(default_filter_band(basis));
  const GateMatrix gate = build_gate(cfg);

  json report;
  report["config_hash"] = ctx.hash;
  report["field"] = field_path.string();
  const OctConfig oct = cfg.oct_for(parse_functional(o.functional));
  const ControlField guess = make_guess_field(basis, oct, cfg.guess_amplitude);
  const Spectrum guess_spec = spectrum(guess);
  io::save_spectrum(guess_spec, dir / "spectrum_guess.csv", ctx.hash);
  report["guess_lines"] = guess_spec.peaks.size();

  const Spectrum spec = spectrum(field);
  io::save_spectrum(spec, dir / "spectrum_field.csv", ctx.hash);
  const auto lines = line_frequencies(basis, {1, 3});
  const auto offsets = peak_offsets(spec, lines);
  report["peaks_hz"] = spec.peak_frequencies();
  report["peak_offsets_bins"] = offsets;
  report["bin_width_hz"] = spec.bin_width;

  const ControlField filtered = bandpass_filter(field, band);
  io::save_field(filtered, dir / "field_filtered.csv", ctx.hash, 0);
  io::save_spectrum(spectrum(filtered), dir / "spectrum_filtered.csv", ctx.hash);
  report["band_hz"] = {band.lo_hz, band.hi_hz};
  report["fidelity_before_filter"] = fidelity(gate, evolution_operator(field, basis, gate.size()));
  report["fidelity_after_filter"] = fidelity(gate, evolution_operator(filtered, basis, gate.size()));
  report["peak_field_Vpm"] = units::au_to_vpm(field.peak());
  io::write_atomic(dir / "report.json", report.dump(2) + "\n");
  std::printf("%zu spectral peaks, guess field %zu lines; F %.8f -> %.8f after filtering [%.3g, %.3g] Hz\n",
              spec.peaks.size(), guess_spec.peaks.size(), report["fidelity_before_filter"].get<double>(),
              report["fidelity_after_filter"].get<double>(), band.lo_hz, band.hi_hz);
  std::printf("re-optimize with: iontrap optimize --resume %s\n", (dir / "field_filtered.csv").c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trapped-ion simulator of the elementary evolution operator"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--tier", o.tier, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--out", o.out, "output directory");
  app.add_option("--resume", o.resume, "field CSV to restart the optimization from");
  app.add_option("--kappa", o.kappa, "comma-separated kappa values (a.u.)");
  app.add_flag("--long-running", o.long_running, "acknowledge a paper-tier run");

  auto* trap = app.add_subcommand("trap", "diagonalize the trap and write the eigenbasis");
  auto* gate = app.add_subcommand("gate", "build the elementary evolution operator");
  auto* optimize = app.add_subcommand("optimize", "optimize a control field");
  optimize->add_option("--mode", o.mode, "gate or prep")->check(CLI::IsMember({"gate", "prep"}));
  optimize->add_option("--functional", o.functional, "F or P")->check(CLI::IsMember({"F", "P"}));
  optimize->add_flag("--dissipative", o.dissipative, "optimize under Lindblad dynamics (needs --kappa)");
  optimize->add_option("--packet", o.packet, "packet index for --mode prep");
  auto* simulate = app.add_subcommand("simulate", "run the concatenated-pulse simulation");
  simulate->add_option("--functional", o.functional, "which gate field to use (F or P)")
      ->check(CLI::IsMember({"F", "P"}));
  simulate->add_option("--field", o.field, "gate field CSV (overrides --functional)");
  auto* analyze = app.add_subcommand("analyze", "spectra and band-pass filtering of a field");
  analyze->add_option("--functional", o.functional, "which gate field to use (F or P)")
      ->check(CLI::IsMember({"F", "P"}));
  analyze->add_option("--field", o.field, "field CSV (overrides --functional)");

  for (auto* sub : {trap, gate, optimize, simulate, analyze}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*trap) return cmd_trap(o);
    if (*gate) return cmd_gate(o);
    if (*optimize) return cmd_optimize(o);
    if (*simulate) return cmd_simulate(o);
    if (*analyze) return cmd_analyze(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
