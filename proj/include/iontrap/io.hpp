#pragma once

// File formats. CSV numbers use 17 significant digits; every file carries the
// hash of the configuration that produced it (a "# config_hash=" first line
// for CSV, a "config_hash" key for JSON). Writes go to a temporary file that
// is renamed into place.

#include <Eigen/Dense>
#include "json.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "iontrap/analysis.hpp"
#include "iontrap/error.hpp"
#include "iontrap/field.hpp"
#include "iontrap/gridsim.hpp"
#include "iontrap/oct.hpp"
#include "iontrap/trap.hpp"
#include "iontrap/units.hpp"

namespace iontrap::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CsvWriter {
 public:
  CsvWriter(const std::string& hash, const std::vector<std::string>& columns) {
    os_ << "# config_hash=" << hash << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << '\n';
  }

  template <class... T>
  void row(const T&... values) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(values), first = false), ...);
    os_ << '\n';
  }

  void save(const fs::path& path) const { write_atomic(path, os_.str()); }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::ostringstream os_;
};

struct CsvTable {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Value of a "key=value" comment, or empty.
  std::string comment_value(const std::string& key) const {
    for (const auto& c : comments) {
      const auto pos = c.find(key + "=");
      if (pos != std::string::npos) {
        auto v = c.substr(pos + key.size() + 1);
        const auto end = v.find_first_of(" \t");
        return end == std::string::npos ? v : v.substr(0, end);
      }
    }
    return {};
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw ConfigError("CSV is missing column '" + name + "'");
  }
};

inline CsvTable read_csv(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("file not found: " + path.string());
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(1));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (t.columns.empty()) {
      t.columns = cells;
      continue;
    }
    if (cells.size() != t.columns.size()) throw ConfigError("ragged row in " + path.string());
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw ConfigError("non-numeric cell '" + c + "' in " + path.string());
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw ConfigError("empty CSV: " + path.string());
  return t;
}

inline std::string matrix_csv(const Eigen::MatrixXd& m, const std::string& hash) {
  std::ostringstream os;
  os << "# config_hash=" << hash << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << num(m(i, j));
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

inline void save_basis(const EigenBasis& basis, const fs::path& dir, const std::string& hash) {
  json meta;
  meta["config_hash"] = hash;
  meta["params"] = {{"mass_au", basis.params.mass},
                    {"charge_au", basis.params.charge},
                    {"k_au", basis.params.k},
                    {"k_quart_au", basis.params.k_quart},
                    {"primitive_size", basis.params.primitive_size},
                    {"dynamical_size", basis.params.dynamical_size},
                    {"computational_size", basis.params.computational_size}};
  meta["omega_au"] = basis.omega;
  meta["frequency_hz"] = units::angular_au_to_hz(basis.omega);
  meta["energies_au"] = std::vector<double>(basis.energies.data(), basis.energies.data() + basis.energies.size());
  meta["files"] = {{"vectors", "eigenvectors.csv"}, {"z_matrix", "z_matrix.csv"}, {"dipole", "dipole.csv"}};
  write_atomic(dir / "eigenbasis.json", meta.dump(2) + "\n");
  write_atomic(dir / "eigenvectors.csv", matrix_csv(basis.vectors, hash));
  write_atomic(dir / "z_matrix.csv", matrix_csv(basis.z_matrix, hash));
  write_atomic(dir / "dipole.csv", matrix_csv(basis.dipole, hash));

  CsvWriter lines(hash, {"lower", "upper", "delta", "frequency_hz", "dipole_au"});
  for (const auto& t : transition_table(basis, {1, 3})) {
    lines.row(t.lower, t.upper, t.upper - t.lower, t.frequency_hz, t.dipole);
  }
  lines.save(dir / "transitions.csv");
}

inline void save_gate(const GateMatrix& gate, const fs::path& csv_path, const std::string& hash) {
  CsvWriter w(hash, {"row", "col", "re", "im"});
  for (Eigen::Index i = 0; i < gate.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < gate.entries.cols(); ++j) {
      w.row(i, j, gate.entries(i, j).real(), gate.entries(i, j).imag());
    }
  }
  w.save(csv_path);
  json meta;
  meta["config_hash"] = hash;
  meta["N"] = gate.size();
  meta["delta_t_au"] = gate.delta_t;
  meta["K"] = gate.steps;
  meta["sub_step_au"] = gate.sub_step;
  meta["potential"] = gate.potential_label;
  meta["unitarity_deviation"] = gate.unitarity_deviation();
  fs::path header = csv_path;
  header.replace_extension(".json");
  write_atomic(header, meta.dump(2) + "\n");
}

inline GateMatrix load_gate(const fs::path& csv_path) {
  const CsvTable t = read_csv(csv_path);
  const std::size_t r = t.column("row"), c = t.column("col"), re = t.column("re"), im = t.column("im");
  Eigen::Index n = 0;
  for (const auto& row : t.rows) n = std::max<Eigen::Index>(n, static_cast<Eigen::Index>(row[r]) + 1);
  if (static_cast<std::size_t>(n * n) != t.rows.size()) throw ConfigError("gate CSV is not a full square matrix");
  GateMatrix g;
  g.entries = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& row : t.rows) {
    g.entries(static_cast<Eigen::Index>(row[r]), static_cast<Eigen::Index>(row[c])) = cplx{row[re], row[im]};
  }
  fs::path header = csv_path;
  header.replace_extension(".json");
  if (fs::exists(header)) {
    const auto meta = json::parse(read_text(header));
    g.delta_t = meta.value("delta_t_au", 0.0);
    g.steps = meta.value("K", std::size_t{1});
    g.sub_step = meta.value("sub_step_au", 0.0);
    g.potential_label = meta.value("potential", std::string{});
  }
  return g;
}

inline void save_amplitudes(const QubitAmplitudes& a, const fs::path& path, const std::string& hash) {
  CsvWriter w(hash, {"j", "re", "im", "population"});
  for (Eigen::Index j = 0; j < a.c.size(); ++j) w.row(j, a.c[j].real(), a.c[j].imag(), std::norm(a.c[j]));
  w.save(path);
}

/// Field CSV; `iteration` is recorded as a comment for resumable runs.
inline void save_field(const ControlField& f, const fs::path& path, const std::string& hash,
                       long iteration = -1) {
  std::ostringstream os;
  os << "# config_hash=" << hash << '\n';
  if (iteration >= 0) os << "# iteration=" << iteration << '\n';
  os << "t_au,E_au,t_s,E_Vpm\n";
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    const double t = f.time(i);
    os << num(t) << ',' << num(f.samples[i]) << ',' << num(units::au_to_seconds(t)) << ','
       << num(units::au_to_vpm(f.samples[i])) << '\n';
  }
  write_atomic(path, os.str());
}

struct LoadedField {
  ControlField field;
  long iteration = -1;
};

inline LoadedField load_field(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t tc = t.column("t_au"), ec = t.column("E_au");
  if (t.rows.size() < 2) throw ConfigError("field file needs at least two samples: " + path.string());
  LoadedField out;
  for (const auto& row : t.rows) out.field.samples.push_back(row[ec]);
  const double span = t.rows.back()[tc] - t.rows.front()[tc];
  out.field.dt = span / static_cast<double>(t.rows.size() - 1);
  const auto it = t.comment_value("iteration");
  if (!it.empty()) out.iteration = std::stol(it);
  out.field.validate();
  return out;
}

inline void save_trace(const std::vector<OctRecord>& records, const fs::path& path, const std::string& hash) {
  CsvWriter w(hash, {"iteration", "J", "F", "fluence"});
  for (const auto& r : records) w.row(r.iteration, r.objective, r.fidelity, r.fluence);
  w.save(path);
}

inline std::vector<OctRecord> load_trace(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t i = t.column("iteration"), j = t.column("J"), f = t.column("F"), e = t.column("fluence");
  std::vector<OctRecord> out;
  for (const auto& row : t.rows) out.push_back({static_cast<std::size_t>(row[i]), row[j], row[f], row[e]});
  return out;
}

inline void save_spectrum(const Spectrum& s, const fs::path& path, const std::string& hash) {
  CsvWriter w(hash, {"nu_Hz", "power"});
  for (std::size_t k = 0; k < s.frequencies.size(); ++k) w.row(s.frequencies[k], s.power[k]);
  w.save(path);
}

inline void save_series(const std::vector<double>& values, const std::string& name, std::size_t first_index,
                        const fs::path& path, const std::string& hash) {
  CsvWriter w(hash, {"pulse", name});
  for (std::size_t l = 0; l < values.size(); ++l) w.row(first_index + l, values[l]);
  w.save(path);
}

/// Probability snapshots (l, j, x_j, prob).
inline void save_snapshots(const std::vector<std::vector<double>>& probs, const Grid& grid, const fs::path& path,
                           const std::string& hash) {
  CsvWriter w(hash, {"l", "j", "x_j", "prob"});
  for (std::size_t l = 0; l < probs.size(); ++l) {
    for (std::size_t j = 0; j < probs[l].size(); ++j) w.row(l, j, grid.points[j], probs[l][j]);
  }
  w.save(path);
}

}  // namespace iontrap::io
