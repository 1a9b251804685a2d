#pragma once

// Result export. File names under the output directory:
//   <magnet>_{v_m,i_m,Phi,R_t,T_mid}.csv   t,<quantity>
//   <magnet>_{u,stress}.csv                x,<quantity> (nodes for u, element midpoints for stress)
//   circuit_phi_<node>.csv, circuit_i_<element>.csv
//   report.json, residuals.csv

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quenchwr/circuit.hpp"
#include "quenchwr/errors.hpp"
#include "quenchwr/scenario.hpp"
#include "quenchwr/waveform.hpp"
#include "quenchwr/wr.hpp"

namespace quenchwr {

namespace fs = std::filesystem;

inline nlohmann::json to_json(const WrReport& r) {
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : r.windows) {
    windows.push_back({{"t0", w.t0},
                       {"t_end", w.t_end},
                       {"iterations", w.iterations},
                       {"residuals", w.residuals},
                       {"contraction", std::isfinite(w.contraction) ? nlohmann::json(w.contraction)
                                                                    : nlohmann::json("inf")},
                       {"converged", w.converged}});
  }
  const double rho = r.contraction();
  return {{"mode", to_string(r.mode)},
          {"tol", r.tol},
          {"k_max", r.k_max},
          {"converged", r.converged},
          {"total_iterations", r.total_iterations()},
          {"contraction", std::isfinite(rho) ? nlohmann::json(rho) : nlohmann::json("inf")},
          {"diagnostic", r.diagnostic},
          {"windows", std::move(windows)}};
}

inline void write_json_file(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!text.ends_with('\n')) out << '\n';
}

/// Columns x,<name>; one row per position.
inline void write_profile_csv(const fs::path& path, const std::string& name,
                              std::span<const double> x, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "x," << name << '\n';
  for (std::size_t k = 0; k < values.size(); ++k) {
    out << detail::format_double(x[k]) << ',' << detail::format_double(values[k]) << '\n';
  }
}

inline void write_residuals_csv(const fs::path& path, const WrReport& r) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "window,iteration,residual\n";
  for (std::size_t w = 0; w < r.windows.size(); ++w) {
    for (std::size_t k = 0; k < r.windows[w].residuals.size(); ++k) {
      out << w << ',' << k + 1 << ',' << detail::format_double(r.windows[w].residuals[k]) << '\n';
    }
  }
}

/// Writes all per-magnet and circuit results; returns the written paths.
inline std::vector<fs::path> write_solution(const fs::path& dir, const Scenario& sc,
                                            const NetworkSolution& sol) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto csv = [&](const std::string& stem, const std::string& column, const Waveform& w) {
    const fs::path p = dir / (stem + ".csv");
    write_csv_file(p.string(), column, w);
    written.push_back(p);
  };
  const std::vector<MagnetConfig> configs = sc.configs();
  for (std::size_t m = 0; m < sol.magnets.size(); ++m) {
    const std::string& id = configs[m].id;
    const MagnetSolution& s = sol.magnets[m];
    csv(id + "_v_m", "v_m", s.voltage);
    csv(id + "_i_m", "i_m", s.current);
    csv(id + "_Phi", "Phi", s.flux);
    csv(id + "_R_t", "R_t", s.resistance);
    csv(id + "_T_mid", "T_mid", s.T_mid);
    if (m < sol.elastic.size()) {
      const Mesh1d& mesh = configs[m].elastic.mesh;
      std::vector<double> mid(mesh.num_elements());
      for (std::size_t e = 0; e < mid.size(); ++e) mid[e] = mesh.midpoint(e);
      written.push_back(dir / (id + "_u.csv"));
      write_profile_csv(written.back(), "u", mesh.nodes(), sol.elastic[m].u);
      written.push_back(dir / (id + "_stress.csv"));
      write_profile_csv(written.back(), "stress", mid, sol.elastic[m].stress);
    }
  }
  const Netlist& net = sc.netlist;
  for (std::size_t n = 0; n < net.nodes.size(); ++n) {
    csv("circuit_phi_" + net.nodes[n], "phi", sol.circuit.potentials[n]);
  }
  auto currents = [&](ElementKind kind, const std::vector<Waveform>& waves) {
    const auto idx = net.indices(kind);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      csv("circuit_i_" + net.elements[idx[k]].name, "i", waves[k]);
    }
  };
  currents(ElementKind::Inductor, sol.circuit.inductor_currents);
  currents(ElementKind::VoltageSource, sol.circuit.vsource_currents);
  currents(ElementKind::Magnet, sol.circuit.magnet_currents);

  written.push_back(dir / "report.json");
  write_json_file(written.back(), to_json(sol.report));
  written.push_back(dir / "residuals.csv");
  write_residuals_csv(written.back(), sol.report);
  return written;
}

/// sup_diff(a, b) / max(sup_norm(b), 1e-12)
inline double relative_deviation(const Waveform& a, const Waveform& b) {
  return sup_diff(a, b) / std::max(sup_norm(b), 1e-12);
}

struct ComparisonRow {
  std::string magnet;
  std::string quantity;
  double plain_vs_reference = 0.0;
  double accelerated_vs_reference = 0.0;
  double plain_vs_accelerated = 0.0;
};

/// One row per magnet per exchanged or derived quantity.
inline std::vector<ComparisonRow> compare_solutions(const Scenario& sc, const NetworkSolution& plain,
                                                    const NetworkSolution& accelerated,
                                                    const NetworkSolution& reference) {
  std::vector<ComparisonRow> rows;
  const std::pair<const char*, Waveform MagnetSolution::*> quantities[] = {
      {"v_m", &MagnetSolution::voltage},
      {"i_m", &MagnetSolution::current},
      {"Phi", &MagnetSolution::flux},
      {"R_t", &MagnetSolution::resistance},
      {"T_mid", &MagnetSolution::T_mid}};
  for (std::size_t m = 0; m < sc.magnets.size(); ++m) {
    for (const auto& [name, member] : quantities) {
      const Waveform& p = plain.magnets[m].*member;
      const Waveform& a = accelerated.magnets[m].*member;
      const Waveform& r = reference.magnets[m].*member;
      rows.push_back({sc.magnets[m].id, name, relative_deviation(p, r), relative_deviation(a, r),
                      relative_deviation(p, a)});
    }
  }
  return rows;
}

inline void write_comparison_csv(const fs::path& path, std::span<const ComparisonRow> rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "magnet,quantity,plain_vs_reference,accelerated_vs_reference,plain_vs_accelerated\n";
  for (const auto& r : rows) {
    out << r.magnet << ',' << r.quantity << ',' << detail::format_double(r.plain_vs_reference) << ','
        << detail::format_double(r.accelerated_vs_reference) << ','
        << detail::format_double(r.plain_vs_accelerated) << '\n';
  }
}

}  // namespace quenchwr
