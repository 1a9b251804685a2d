#pragma once

// Scenario: magnet specifications, netlist and solver settings for one run.
// All quantities SI.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "quenchwr/circuit.hpp"
#include "quenchwr/errors.hpp"
#include "quenchwr/fem1d.hpp"
#include "quenchwr/magnet_operator.hpp"

namespace quenchwr {

/// Uniform-material magnet description from which a MagnetConfig is built.
struct MagnetSpec {
  std::string id;
  // geometry
  double length = 0.1;              ///< m
  std::size_t n_elements = 32;
  std::size_t coil_first = 8;       ///< first coil element
  std::size_t coil_last = 24;       ///< one past the last coil element
  double depth = 1.0;               ///< l_z, m
  double turns = 1.0;
  double coil_height = 1.0;         ///< m, chi = turns / (coil width * coil_height)
  // materials
  double sigma_eddy = 0.0;          ///< S/m, coil
  double sigma_eddy_outside = 0.0;  ///< S/m
  double sigma_n = 1e6;             ///< S/m, coil
  double nu = 7.957747154594767e5;  ///< m/H
  double rho_cp = 1e3;              ///< J/(m^3 K)
  double k = 1.0;                   ///< W/(m K)
  double youngs = 1e11;             ///< Pa
  double expansion = 1e-5;          ///< 1/K
  double heat_source = 0.0;         ///< W/m^3, coil
  double T_bath = 1.9;
  double T_ref = 1.9;
  QuenchParams quench;
  double dt_magnet = 1e-3;
  bool feed_eddy_losses = false;

  double coil_width() const {
    return length * static_cast<double>(coil_last - coil_first) / static_cast<double>(n_elements);
  }
  double chi() const { return turns / (coil_width() * coil_height); }

  bool operator==(const MagnetSpec&) const = default;
};

inline MagnetConfig build_magnet(const MagnetSpec& s) {
  if (s.id.empty()) throw ValidationError("magnet id must not be empty");
  if (!(s.length > 0.0)) throw ValidationError("magnet '" + s.id + "': length must be positive");
  if (s.n_elements < 2) throw ValidationError("magnet '" + s.id + "': n_elements must be >= 2");
  if (s.coil_first >= s.coil_last || s.coil_last > s.n_elements) {
    throw ValidationError("magnet '" + s.id + "': coil element range [" + std::to_string(s.coil_first) +
                          ", " + std::to_string(s.coil_last) + ") is empty or out of mesh");
  }
  if (!(s.turns > 0.0) || !(s.coil_height > 0.0)) {
    throw ValidationError("magnet '" + s.id + "': turns and coil_height must be positive");
  }
  const Mesh1d mesh = Mesh1d::uniform(s.length, s.n_elements);
  const std::size_t ne = s.n_elements;
  auto coil_field = [&](double inside, double outside) {
    CoefficientField f(ne, outside);
    for (std::size_t e = s.coil_first; e < s.coil_last; ++e) f[e] = inside;
    return f;
  };
  MagnetConfig cfg{
      s.id,
      FieldModel{mesh, coil_field(s.sigma_eddy, s.sigma_eddy_outside), CoefficientField(ne, s.nu),
                 coil_field(s.chi(), 0.0), s.depth},
      ThermalModel{mesh, CoefficientField(ne, s.rho_cp), CoefficientField(ne, s.k),
                   coil_field(s.sigma_n, 0.0), coil_field(s.heat_source, 0.0), s.T_bath},
      s.quench,
      ElasticModel{mesh, CoefficientField(ne, s.youngs), CoefficientField(ne, s.expansion), s.T_ref},
      s.dt_magnet,
      s.feed_eddy_losses};
  cfg.validate();
  return cfg;
}

enum class WrMode { Plain, Accelerated };
enum class ElasticSnapshot { End, PeakCurrent };

inline std::string to_string(WrMode m) { return m == WrMode::Plain ? "plain" : "accelerated"; }
inline std::string to_string(ElasticSnapshot s) { return s == ElasticSnapshot::End ? "end" : "peak_current"; }

struct WrConfig {
  double tol = 1e-6;
  std::size_t k_max = 50;
  WrMode mode = WrMode::Plain;
  std::size_t windows = 1;
  std::optional<double> exchange_dt;  ///< defaults to the circuit step
  bool parallel = true;
  ElasticSnapshot elastic_at = ElasticSnapshot::End;

  void validate() const {
    if (!(tol > 0.0)) throw ValidationError("solver.tol must be positive");
    if (k_max < 1) throw ValidationError("solver.k_max must be >= 1");
    if (windows < 1) throw ValidationError("solver.windows must be >= 1");
    if (exchange_dt && !(*exchange_dt > 0.0)) throw ValidationError("solver.exchange_dt must be positive");
  }

  bool operator==(const WrConfig&) const = default;
};

/// Boundaries t0 = w_0 < ... < w_W = t_end of W equal windows.
inline std::vector<double> window_bounds(double t0, double t_end, std::size_t windows) {
  std::vector<double> b(windows + 1);
  for (std::size_t w = 0; w <= windows; ++w) {
    b[w] = t0 + (t_end - t0) * static_cast<double>(w) / static_cast<double>(windows);
  }
  b.back() = t_end;
  return b;
}

struct Scenario {
  std::string name;
  Netlist netlist;
  std::vector<MagnetSpec> magnets;  ///< in netlist magnet-branch order
  double t0 = 0.0;
  double t_end = 1.0;
  double circuit_dt = 1e-3;
  WrConfig solver;
  std::string output_dir = "out";

  /// Built configs, same order as `magnets`.
  std::vector<MagnetConfig> configs() const {
    std::vector<MagnetConfig> out;
    out.reserve(magnets.size());
    for (const auto& m : magnets) out.push_back(build_magnet(m));
    return out;
  }

  double exchange_dt() const { return solver.exchange_dt.value_or(circuit_dt); }

  std::vector<double> window_bounds() const { return quenchwr::window_bounds(t0, t_end, solver.windows); }

  TimeGrid circuit_grid() const { return TimeGrid::with_step(t0, t_end, circuit_dt); }

  void validate() const {
    if (!std::isfinite(t0) || !std::isfinite(t_end) || !(t_end > t0)) {
      throw ValidationError("interval: t_end (" + std::to_string(t_end) + ") must exceed t0 (" +
                            std::to_string(t0) + ")");
    }
    if (!(circuit_dt > 0.0)) throw ValidationError("circuit_dt must be positive");
    solver.validate();
    std::vector<std::string> ids;
    for (const auto& m : magnets) {
      if (std::find(ids.begin(), ids.end(), m.id) != ids.end()) {
        throw ValidationError("magnets: duplicate id '" + m.id + "'");
      }
      ids.push_back(m.id);
    }
    validate_netlist(netlist, ids);
    const auto used = netlist.magnet_ids();
    for (const auto& id : ids) {
      if (std::find(used.begin(), used.end(), id) == used.end()) {
        throw ValidationError("magnets: '" + id + "' is defined but no netlist magnet element uses it");
      }
    }
    if (used != ids) throw ValidationError("magnets must be listed in netlist magnet-element order");
    for (const auto& m : magnets) build_magnet(m);
  }

  bool operator==(const Scenario&) const = default;
};

}  // namespace quenchwr
