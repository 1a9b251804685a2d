#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "quenchwr/quenchwr.hpp"

#ifndef QUENCHWR_SCENARIO_DIR
#define QUENCHWR_SCENARIO_DIR "scenarios"
#endif

namespace fixture {

using namespace quenchwr;

inline std::string scenario_path(const std::string& name) {
  return std::string(QUENCHWR_SCENARIO_DIR) + "/" + name + ".json";
}

inline Scenario shipped(const std::string& name) { return load_scenario(scenario_path(name)); }

/// The magnet used in the shipped scenarios.
inline MagnetSpec magnet(const std::string& id, bool quench = false) {
  MagnetSpec m;
  m.id = id;
  m.length = 0.1;
  m.n_elements = 32;
  m.coil_first = 8;
  m.coil_last = 24;
  m.turns = 35.0;
  m.coil_height = 0.05;
  m.sigma_eddy = 1e5;
  m.sigma_n = 1.6e6;
  m.nu = 7.9577e5;
  m.rho_cp = 1e3;
  m.k = 0.5;
  m.quench.enabled = quench;
  m.quench.J_c = 1e9;
  m.dt_magnet = 5e-3;
  return m;
}

inline Waveform table(std::vector<std::pair<double, double>> rows) {
  std::vector<double> t;
  std::vector<double> v;
  for (auto [a, b] : rows) {
    t.push_back(a);
    v.push_back(b);
  }
  return Waveform(TimeGrid(std::move(t)), std::move(v));
}

inline Element element(ElementKind kind, std::string name, std::size_t plus, std::size_t minus,
                       double value = 0.0) {
  Element e;
  e.kind = kind;
  e.name = std::move(name);
  e.node_plus = plus;
  e.node_minus = minus;
  e.value = value;
  return e;
}

inline Element magnet_branch(std::string name, std::size_t plus, std::size_t minus, std::string id) {
  Element e = element(ElementKind::Magnet, std::move(name), plus, minus);
  e.magnet = std::move(id);
  return e;
}

inline Element vsource(std::string name, std::size_t plus, std::size_t minus, std::string source) {
  Element e = element(ElementKind::VoltageSource, std::move(name), plus, minus);
  e.source = std::move(source);
  return e;
}

/// supply -> R -> magnet(s) in series -> ground.
inline Scenario chain(std::vector<MagnetSpec> magnets, double resistance, Waveform supply,
                      double t_end, double dt, double tol = 1e-8) {
  Scenario sc;
  sc.name = "chain";
  Netlist& net = sc.netlist;
  net.nodes.push_back("n1");
  net.elements.push_back(vsource("V1", 0, kGround, "supply"));
  net.nodes.push_back("n2");
  net.elements.push_back(element(ElementKind::Resistor, "R1", 0, 1, resistance));
  for (std::size_t m = 0; m < magnets.size(); ++m) {
    const bool last = m + 1 == magnets.size();
    if (!last) net.nodes.push_back("n" + std::to_string(m + 3));
    net.elements.push_back(
        magnet_branch("B" + std::to_string(m + 1), m + 1, last ? kGround : m + 2, magnets[m].id));
  }
  net.sources.emplace("supply", Signal(std::move(supply)));
  sc.magnets = std::move(magnets);
  sc.t0 = 0.0;
  sc.t_end = t_end;
  sc.circuit_dt = dt;
  for (auto& m : sc.magnets) m.dt_magnet = dt;
  sc.solver.tol = tol;
  sc.solver.k_max = 200;
  sc.validate();
  return sc;
}

/// One magnet, 20 Ohm series resistor, supply ramp to 200 V over [0, 0.1] then held.
inline Scenario single_magnet(bool quench = false, double t_end = 0.3, double dt = 5e-3) {
  return chain({magnet("M1", quench)}, 20.0,
               table({{0.0, 0.0}, {0.1, 200.0}, {t_end, 200.0}}), t_end, dt);
}

/// Independent single-magnet config with uniform coefficients on [coil_first, coil_last).
inline MagnetConfig uniform_config(std::size_t n, double length, std::size_t coil_first,
                                   std::size_t coil_last, double chi, double sigma, double nu,
                                   double rho_cp, double k, double sigma_n, double dt_magnet) {
  const Mesh1d mesh = Mesh1d::uniform(length, n);
  CoefficientField chi_f(n, 0.0);
  CoefficientField sn(n, 0.0);
  for (std::size_t e = coil_first; e < coil_last; ++e) {
    chi_f[e] = chi;
    sn[e] = sigma_n;
  }
  return MagnetConfig{"M",
                      FieldModel{mesh, CoefficientField(n, sigma), CoefficientField(n, nu), chi_f, 1.0},
                      ThermalModel{mesh, CoefficientField(n, rho_cp), CoefficientField(n, k), sn,
                                   CoefficientField(n, 0.0), 1.9},
                      QuenchParams{},
                      ElasticModel{mesh, CoefficientField(n, 1e11), CoefficientField(n, 1e-5), 1.9},
                      dt_magnet,
                      false};
}

}  // namespace fixture
