#pragma once

// Run configuration: a JSON document whose physical quantities are strings
// with a unit suffix ("96 us", "0.1 Vpm", "-4 au"). Bare numbers are read as
// atomic units. A tier preset supplies every default; the file overrides it.

#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "iontrap/analysis.hpp"
#include "iontrap/error.hpp"
#include "iontrap/gridsim.hpp"
#include "iontrap/io.hpp"
#include "iontrap/oct.hpp"
#include "iontrap/propagator.hpp"
#include "iontrap/trap.hpp"
#include "iontrap/units.hpp"

namespace iontrap {

enum class Quantity { plain, time, field, length, frequency, mass };

/// Parses "<number> [unit]" into atomic units (frequencies into Hz).
inline double parse_quantity(const nlohmann::json& value, Quantity kind, const std::string& key) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw ConfigError(key + ": expected a number or a '<value> <unit>' string");
  std::istringstream in(value.get<std::string>());
  double x = 0.0;
  std::string unit;
  if (!(in >> x)) throw ConfigError(key + ": cannot parse '" + value.get<std::string>() + "'");
  in >> unit;
  std::string extra;
  if (in >> extra) throw ConfigError(key + ": trailing text in '" + value.get<std::string>() + "'");
  if (unit.empty() || unit == "au") {
    if (kind == Quantity::frequency) throw ConfigError(key + ": frequencies need Hz, kHz or MHz");
    return x;
  }
  static const std::map<std::pair<Quantity, std::string>, double> factors = {
      {{Quantity::time, "s"}, 1.0 / units::kTimeSeconds},
      {{Quantity::time, "ms"}, 1e-3 / units::kTimeSeconds},
      {{Quantity::time, "us"}, 1e-6 / units::kTimeSeconds},
      {{Quantity::time, "ns"}, 1e-9 / units::kTimeSeconds},
      {{Quantity::time, "ps"}, 1e-12 / units::kTimeSeconds},
      {{Quantity::field, "Vpm"}, 1.0 / units::kFieldVoltPerMeter},
      {{Quantity::length, "nm"}, 1e-9 / units::kLengthMeters},
      {{Quantity::frequency, "Hz"}, 1.0},
      {{Quantity::frequency, "kHz"}, 1e3},
      {{Quantity::frequency, "MHz"}, 1e6},
      {{Quantity::mass, "Da"}, units::kDaltonInElectronMasses},
  };
  const auto it = factors.find({kind, unit});
  if (it == factors.end()) throw ConfigError(key + ": unit '" + unit + "' is not valid here");
  return x * it->second;
}

struct PacketSpec {
  double sigma = 1.0;
  double x0 = -0.75;
};

struct RunConfig {
  std::string tier = "desk";
  TrapParams trap;

  double sim_mass = 1.0;
  std::string potential = "harmonic";
  double sim_omega = 1.0;
  double x_min = -4.0;
  double x_max = 4.0;
  std::size_t points = 16;
  double delta_t = 2.0 * std::numbers::pi / 10.0;
  std::size_t k_steps = 10;
  std::size_t pulses = 10;

  OctConfig oct;
  double alpha0_p = 1e15;
  double alpha0_f = 4e15;
  double guess_amplitude = 1.945e-13;
  std::size_t checkpoint_every = 10;

  std::vector<double> kappas{1e-18, 5e-18, 1e-17};
  DissipationOptions dissipation;

  std::vector<PacketSpec> packets{{1.0, -0.75}};
  std::optional<Band> filter;

  static RunConfig desk() {
    RunConfig c;
    c.tier = "desk";
    c.trap.dynamical_size = 8;
    c.trap.computational_size = 4;
    c.x_min = -2.0;
    c.x_max = 2.0;
    c.points = 4;
    c.oct.t_pulse = units::us_to_au(40.0);
    c.oct.dt = units::ns_to_au(2.0);
    c.alpha0_p = 1e13;
    c.alpha0_f = 4e13;
    c.oct.max_iterations = 500;
    c.oct.fidelity_goal = 0.99;
    return c;
  }

  static RunConfig paper() {
    RunConfig c;
    c.tier = "paper";
    c.oct.t_pulse = units::us_to_au(96.0);
    c.oct.dt = units::ps_to_au(960.0);
    c.oct.max_iterations = 1500;
    c.oct.fidelity_goal = 0.99999;
    c.packets = {{1.0, -0.75}, {0.5, -0.75}};
    return c;
  }

  static RunConfig preset(const std::string& tier) {
    if (tier == "desk") return desk();
    if (tier == "paper") return paper();
    throw ConfigError("unknown tier '" + tier + "' (expected desk or paper)");
  }

  SimSystem system() const {
    if (potential == "harmonic") return SimSystem::harmonic(sim_mass, sim_omega);
    if (potential == "free") return SimSystem::free_particle(sim_mass);
    throw ConfigError("sim.potential must be 'harmonic' or 'free'");
  }

  Grid grid() const { return make_grid(x_min, x_max, points); }

  OctConfig oct_for(Functional f) const {
    OctConfig c = oct;
    c.functional = f;
    c.alpha0 = f == Functional::probability ? alpha0_p : alpha0_f;
    c.include_superposition_target = true;
    return c;
  }

  void validate() const {
    trap.validate();
    if (points != trap.computational_size) {
      throw ConfigError("sim.points (" + std::to_string(points) + ") must equal trap.N (" +
                        std::to_string(trap.computational_size) + ")");
    }
    if (!(x_min < x_max)) throw ConfigError("sim: x_min must be below x_max");
    if (points < 2) throw ConfigError("sim: need at least two grid points");
    if (!(sim_mass > 0.0)) throw ConfigError("sim.mass must be positive");
    if (k_steps < 1) throw ConfigError("sim.K must be at least 1");
    if (delta_t < 0.0) throw ConfigError("sim.delta_t must be non-negative");
    oct_for(Functional::probability).validate();
    oct_for(Functional::fidelity).validate();
    ControlField::zeros(oct.t_pulse, oct.dt);
    for (double k : kappas) {
      if (!(k >= 0.0)) throw ConfigError("dissipation.kappa values must be non-negative");
    }
    for (const auto& p : packets) {
      if (!(p.sigma > 0.0)) throw ConfigError("packets: sigma must be positive");
    }
    if (filter && (filter->lo_hz < 0.0 || filter->hi_hz < filter->lo_hz)) {
      throw ConfigError("filter: need 0 <= lo <= hi");
    }
    system();
  }

  /// Resolved configuration as canonical JSON (all values in a.u. / Hz).
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tier"] = tier;
    j["trap"] = {{"mass", trap.mass},       {"charge", trap.charge},
                 {"k", trap.k},             {"k_quart", trap.k_quart},
                 {"M", trap.primitive_size}, {"D", trap.dynamical_size},
                 {"N", trap.computational_size}};
    j["sim"] = {{"mass", sim_mass}, {"potential", potential}, {"omega", sim_omega}, {"x_min", x_min},
                {"x_max", x_max},   {"points", points},       {"delta_t", delta_t}, {"K", k_steps},
                {"pulses", pulses}};
    j["oct"] = {{"t_pulse", oct.t_pulse},
                {"dt", oct.dt},
                {"alpha0_P", alpha0_p},
                {"alpha0_F", alpha0_f},
                {"max_iterations", oct.max_iterations},
                {"fidelity_goal", oct.fidelity_goal},
                {"guess_amplitude", guess_amplitude},
                {"checkpoint_every", checkpoint_every}};
    j["dissipation"] = {{"kappa", kappas},
                        {"deltas", std::vector<int>(dissipation.deltas.begin(), dissipation.deltas.end())},
                        {"all_dipole_pairs", dissipation.all_dipole_pairs}};
    auto packs = nlohmann::ordered_json::array();
    for (const auto& p : packets) packs.push_back({{"sigma", p.sigma}, {"x0", p.x0}});
    j["packets"] = packs;
    if (filter) j["filter"] = {{"lo", filter->lo_hz}, {"hi", filter->hi_hz}};
    return j;
  }

  std::string hash() const { return io::fnv1a_hex(to_json().dump()); }
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(section + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
  }
}

inline std::size_t count(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(key + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

}  // namespace detail

/// Applies a JSON document on top of `base`.
inline RunConfig apply_config(RunConfig c, const nlohmann::json& doc) {
  using detail::check_keys;
  using detail::count;
  check_keys(doc, "config", {"tier", "trap", "sim", "oct", "dissipation", "packets", "filter"});
  if (doc.contains("trap")) {
    const auto& t = doc["trap"];
    check_keys(t, "trap", {"mass", "charge", "k", "k_quart", "M", "D", "N"});
    if (t.contains("mass")) c.trap.mass = parse_quantity(t["mass"], Quantity::mass, "trap.mass");
    if (t.contains("charge")) c.trap.charge = parse_quantity(t["charge"], Quantity::plain, "trap.charge");
    if (t.contains("k")) c.trap.k = parse_quantity(t["k"], Quantity::plain, "trap.k");
    if (t.contains("k_quart")) c.trap.k_quart = parse_quantity(t["k_quart"], Quantity::plain, "trap.k_quart");
    if (t.contains("M")) c.trap.primitive_size = count(t["M"], "trap.M");
    if (t.contains("D")) c.trap.dynamical_size = count(t["D"], "trap.D");
    if (t.contains("N")) c.trap.computational_size = count(t["N"], "trap.N");
  }
  if (doc.contains("sim")) {
    const auto& s = doc["sim"];
    check_keys(s, "sim", {"mass", "potential", "omega", "x_min", "x_max", "points", "delta_t", "K", "pulses"});
    if (s.contains("mass")) c.sim_mass = parse_quantity(s["mass"], Quantity::plain, "sim.mass");
    if (s.contains("potential")) c.potential = s["potential"].get<std::string>();
    if (s.contains("omega")) c.sim_omega = parse_quantity(s["omega"], Quantity::plain, "sim.omega");
    if (s.contains("x_min")) c.x_min = parse_quantity(s["x_min"], Quantity::length, "sim.x_min");
    if (s.contains("x_max")) c.x_max = parse_quantity(s["x_max"], Quantity::length, "sim.x_max");
    if (s.contains("points")) c.points = count(s["points"], "sim.points");
    if (s.contains("delta_t")) c.delta_t = parse_quantity(s["delta_t"], Quantity::time, "sim.delta_t");
    if (s.contains("K")) c.k_steps = count(s["K"], "sim.K");
    if (s.contains("pulses")) c.pulses = count(s["pulses"], "sim.pulses");
  }
  if (doc.contains("oct")) {
    const auto& o = doc["oct"];
    check_keys(o, "oct", {"t_pulse", "dt", "alpha0_P", "alpha0_F", "max_iterations", "fidelity_goal",
                          "guess_amplitude", "checkpoint_every"});
    if (o.contains("t_pulse")) c.oct.t_pulse = parse_quantity(o["t_pulse"], Quantity::time, "oct.t_pulse");
    if (o.contains("dt")) c.oct.dt = parse_quantity(o["dt"], Quantity::time, "oct.dt");
    if (o.contains("alpha0_P")) c.alpha0_p = parse_quantity(o["alpha0_P"], Quantity::plain, "oct.alpha0_P");
    if (o.contains("alpha0_F")) c.alpha0_f = parse_quantity(o["alpha0_F"], Quantity::plain, "oct.alpha0_F");
    if (o.contains("max_iterations")) c.oct.max_iterations = count(o["max_iterations"], "oct.max_iterations");
    if (o.contains("fidelity_goal")) {
      c.oct.fidelity_goal = parse_quantity(o["fidelity_goal"], Quantity::plain, "oct.fidelity_goal");
    }
    if (o.contains("guess_amplitude")) {
      c.guess_amplitude = parse_quantity(o["guess_amplitude"], Quantity::field, "oct.guess_amplitude");
    }
    if (o.contains("checkpoint_every")) c.checkpoint_every = count(o["checkpoint_every"], "oct.checkpoint_every");
  }
  if (doc.contains("dissipation")) {
    const auto& d = doc["dissipation"];
    check_keys(d, "dissipation", {"kappa", "deltas", "all_dipole_pairs"});
    if (d.contains("kappa")) {
      c.kappas.clear();
      const auto& k = d["kappa"];
      if (k.is_array()) {
        for (const auto& v : k) c.kappas.push_back(parse_quantity(v, Quantity::plain, "dissipation.kappa"));
      } else {
        c.kappas.push_back(parse_quantity(k, Quantity::plain, "dissipation.kappa"));
      }
    }
    if (d.contains("deltas")) {
      c.dissipation.deltas.clear();
      for (const auto& v : d["deltas"]) {
        if (!v.is_number_integer() || v.get<int>() <= 0) throw ConfigError("dissipation.deltas: positive integers");
        c.dissipation.deltas.insert(v.get<int>());
      }
    }
    if (d.contains("all_dipole_pairs")) c.dissipation.all_dipole_pairs = d["all_dipole_pairs"].get<bool>();
  }
  if (doc.contains("packets")) {
    if (!doc["packets"].is_array()) throw ConfigError("packets must be a list");
    c.packets.clear();
    for (const auto& p : doc["packets"]) {
      check_keys(p, "packets[]", {"sigma", "x0"});
      PacketSpec spec;
      if (p.contains("sigma")) spec.sigma = parse_quantity(p["sigma"], Quantity::length, "packets.sigma");
      if (p.contains("x0")) spec.x0 = parse_quantity(p["x0"], Quantity::length, "packets.x0");
      c.packets.push_back(spec);
    }
  }
  if (doc.contains("filter")) {
    const auto& f = doc["filter"];
    check_keys(f, "filter", {"lo", "hi"});
    Band b;
    b.lo_hz = parse_quantity(f.at("lo"), Quantity::frequency, "filter.lo");
    b.hi_hz = parse_quantity(f.at("hi"), Quantity::frequency, "filter.hi");
    c.filter = b;
  }
  return c;
}

/// Tier preset, then the file (if any). A "tier" key in the file is used when
/// no tier is given on the command line.
inline RunConfig load_config(const std::string& path, const std::string& tier_override) {
  nlohmann::json doc = nlohmann::json::object();
  if (!path.empty()) {
    try {
      doc = nlohmann::json::parse(io::read_text(path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cannot parse " + path + ": " + e.what());
    }
  }
  std::string tier = tier_override;
  if (tier.empty()) tier = doc.value("tier", std::string("desk"));
  RunConfig c = apply_config(RunConfig::preset(tier), doc);
  c.tier = tier;
  c.validate();
  return c;
}

/// Comma-separated kappa list, e.g. "1e-18,5e-18".
inline std::vector<double> parse_kappa_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_quantity(nlohmann::json(item), Quantity::plain, "--kappa"));
  }
  if (out.empty()) throw ConfigError("--kappa: empty list");
  for (double k : out) {
    if (!(k >= 0.0)) throw ConfigError("--kappa values must be non-negative");
  }
  return out;
}

}  // namespace iontrap
