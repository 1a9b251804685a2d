#pragma once

// Measurements shared by the unit suites and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "quenchwr/quenchwr.hpp"

namespace check {

using namespace quenchwr;
using std::numbers::pi;

// -(c u')' = f on [0, L], u = sin(pi x / L), c = 1.3
inline constexpr double kLength = 0.1;
inline constexpr double kCoef = 1.3;

inline double exact_sin(double x) { return std::sin(pi * x / kLength); }

inline CoefficientField sampled_load(const Mesh1d& mesh, double scale) {
  CoefficientField f(mesh.num_elements());
  for (std::size_t e = 0; e < f.size(); ++e) f[e] = scale * (pi / kLength) * (pi / kLength) * exact_sin(mesh.midpoint(e));
  return f;
}

inline double field_mms_error(std::size_t n) {
  const Mesh1d mesh = Mesh1d::uniform(kLength, n);
  FieldModel m{mesh, CoefficientField(n, 0.0), CoefficientField(n, kCoef), sampled_load(mesh, kCoef), 1.0};
  const FieldState s = step_field(m, FieldState::at_rest(m, 0.0), 1.0, 1.0);
  return oracle::l2_error(oracle::uniform_nodes(kLength, n), s.a, exact_sin);
}

inline double thermal_mms_error(std::size_t n) {
  const Mesh1d mesh = Mesh1d::uniform(kLength, n);
  const double T_bath = 1.9;
  ThermalModel m{mesh, CoefficientField(n, 1.0), CoefficientField(n, kCoef), CoefficientField(n, 0.0),
                 sampled_load(mesh, kCoef), T_bath};
  const ThermalState s = step_thermal(m, ThermalState::at_bath(m, 0.0), CoefficientField(n, 0.0), 1e12);
  return oracle::l2_error(oracle::uniform_nodes(kLength, n), s.T,
                          [&](double x) { return T_bath + exact_sin(x); });
}

inline double elastic_mms_error(std::size_t n) {
  const Mesh1d mesh = Mesh1d::uniform(kLength, n);
  ElasticModel m{mesh, CoefficientField(n, kCoef), CoefficientField(n, 0.0), 1.9};
  const ElasticSolution s = solve_elastic(m, std::vector<double>(n + 1, 1.9), sampled_load(mesh, kCoef));
  return oracle::l2_error(oracle::uniform_nodes(kLength, n), s.u, exact_sin);
}

/// 1 V source, 1 Ohm, 1 F; |phi_C(1) - (1 - 1/e)|.
inline double rc_error(double dt) {
  Netlist net;
  net.nodes = {"n1", "n2"};
  net.elements = {fixture::element(ElementKind::VoltageSource, "V1", 0, kGround, 1.0),
                  fixture::element(ElementKind::Resistor, "R1", 0, 1, 1.0),
                  fixture::element(ElementKind::Capacitor, "C1", 1, kGround, 1.0)};
  CircuitState init = CircuitState::zero(net, 0.0);
  init.phi(0) = 1.0;
  init.i_V(0) = -1.0;
  const TimeGrid grid = TimeGrid::with_step(0.0, 1.0, dt);
  const TransientSolution s = solve_transient(net, KnownVoltage{}, grid, init);
  return std::abs(s.potentials[1][grid.size() - 1] - oracle::rc_charge(1.0, 1.0, 1.0, 1.0));
}

/// Reduced-model magnet (L = 1 H, R = 1 Ohm) shorted by a 0 V source, i(0) = 1 A;
/// |i(1) - 1/e|.
inline double rl_error(double dt) {
  Netlist net;
  net.nodes = {"n1"};
  net.elements = {fixture::magnet_branch("B1", 0, kGround, "M"),
                  fixture::element(ElementKind::VoltageSource, "V0", 0, kGround, 0.0)};
  CircuitState init = CircuitState::zero(net, 0.0);
  init.i_m(0) = 1.0;
  init.i_V(0) = -1.0;
  const TimeGrid grid = TimeGrid::with_step(0.0, 1.0, dt);
  const ReducedModel rm{{1.0}, {Waveform::constant(grid, 1.0)}, {Waveform::constant(grid, 0.0)}};
  const TransientSolution s = solve_transient(net, rm, grid, init);
  return std::abs(s.magnet_currents[0][grid.size() - 1] - oracle::rl_decay(1.0, 1.0, 1.0, 1.0));
}

/// Residual r of i dPhi/dt = dW/dt + P_eddy + r for one step from rest. First order
/// only once dt is below the fastest mode, sigma h^2 / (12 nu) ~ 1e-7 s here.
inline double field_energy_residual(double dt) {
  const MagnetConfig cfg = fixture::uniform_config(32, 0.1, 8, 24, 1.4e4, 1e5, 7.9577e5, 1e3, 1.0, 1.6e6, dt);
  const double i = 10.0;
  const FieldState a0 = FieldState::at_rest(cfg.field, 0.0);
  const FieldState a1 = step_field(cfg.field, a0, i, dt);
  const double terminal = i * (flux_linkage(cfg.field, a1) - flux_linkage(cfg.field, a0)) / dt;
  const double stored = (field_energy(cfg.field, a1) - field_energy(cfg.field, a0)) / dt;
  return terminal - stored - eddy_power(cfg.field, a0, a1, dt);
}

/// |int rho_cp dT dx - dt (int P dx + boundary flow)| relative, one step.
inline double thermal_bookkeeping_error() {
  const std::size_t n = 24;
  const Mesh1d mesh = Mesh1d::uniform(0.1, n);
  CoefficientField rho_cp(n), k(n), p_s(n), p_j(n);
  std::vector<double> T0(n + 1, 1.9);
  for (std::size_t e = 0; e < n; ++e) {
    rho_cp[e] = 800.0 + 40.0 * static_cast<double>(e % 5);
    k[e] = 0.3 + 0.05 * static_cast<double>(e % 3);
    p_s[e] = e < n / 2 ? 150.0 : 0.0;
    p_j[e] = 1e4 * std::sin(0.3 * static_cast<double>(e)) * std::sin(0.3 * static_cast<double>(e));
  }
  for (std::size_t i = 1; i < n; ++i) T0[i] = 1.9 + 0.5 * std::sin(pi * static_cast<double>(i) / n);
  const ThermalModel m{mesh, rho_cp, k, CoefficientField(n, 1e6), p_s, 1.9};
  const double dt = 2e-3;
  const ThermalState s0{0.0, T0};
  const ThermalState s1 = step_thermal(m, s0, p_j, dt);
  double stored = 0.0;
  double source = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    const double h = mesh.h(e);
    stored += rho_cp[e] * h * 0.5 * ((s1.T[e] - T0[e]) + (s1.T[e + 1] - T0[e + 1]));
    source += (p_s[e] + p_j[e]) * h;
  }
  const double supplied = dt * (source + boundary_heat_flow(m, s0, s1, p_j, dt));
  return std::abs(stored - supplied) / std::max(std::abs(stored), std::abs(supplied));
}

/// 1/2 C phi^2 + 1/2 L i^2 over a source-free RLC transient (C on n1, L n1-n2, R n2-gnd).
inline std::vector<double> rlc_energy_trace() {
  Netlist net;
  net.nodes = {"n1", "n2"};
  net.elements = {fixture::element(ElementKind::Capacitor, "C1", 0, kGround, 1e-3),
                  fixture::element(ElementKind::Inductor, "L1", 0, 1, 2e-2),
                  fixture::element(ElementKind::Resistor, "R1", 1, kGround, 0.5)};
  CircuitState init = CircuitState::zero(net, 0.0);
  init.phi(0) = 1.0;
  const TimeGrid grid = TimeGrid::with_step(0.0, 0.5, 1e-3);
  const TransientSolution s = solve_transient(net, KnownVoltage{}, grid, init);
  std::vector<double> energy(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double phi = s.potentials[0][k];
    const double i = s.inductor_currents[0][k];
    energy[k] = 0.5 * 1e-3 * phi * phi + 0.5 * 2e-2 * i * i;
  }
  return energy;
}

/// Single magnet fed by a current source; the whole coil is triggered and the
/// current returns to zero before the end.
inline Scenario heated_magnet_scenario() {
  MagnetSpec m = fixture::magnet("M1", true);
  m.n_elements = 64;
  m.coil_first = 1;
  m.coil_last = 63;
  m.k = 1e-3;
  m.sigma_eddy = 1e3;
  m.quench.trigger = QuenchTrigger{0.05, 1, 63};
  Scenario sc;
  sc.name = "heated";
  sc.netlist.nodes = {"n1"};
  Element src = fixture::element(ElementKind::CurrentSource, "I1", kGround, 0);
  src.source = "feed";
  sc.netlist.elements = {src, fixture::magnet_branch("B1", 0, kGround, "M1")};
  sc.netlist.sources.emplace(
      "feed", Signal(fixture::table({{0.0, 0.0}, {0.02, 10.0}, {0.5, 10.0}, {0.55, 0.0}, {0.6, 0.0}})));
  sc.magnets = {m};
  sc.t0 = 0.0;
  sc.t_end = 0.6;
  sc.circuit_dt = 5e-3;
  sc.solver.tol = 1e-10;
  sc.validate();
  return sc;
}

struct StressCheck {
  double stress_mid = 0.0;
  double expected = 0.0;  ///< -E alpha (T_mid - T_ref)
};

inline StressCheck uniform_heating_stress() {
  const Scenario sc = heated_magnet_scenario();
  const NetworkSolution sol = run_plain_wr(sc, sc.solver);
  const MagnetConfig cfg = build_magnet(sc.magnets[0]);
  const std::size_t mid = cfg.field.mesh.num_elements() / 2;
  const auto& T = sol.magnets[0].final_state.thermal.T;
  const double T_mid = 0.5 * (T[mid] + T[mid + 1]);
  return {sol.elastic[0].stress[mid],
          -cfg.elastic.youngs[mid] * cfg.elastic.expansion[mid] * (T_mid - cfg.elastic.T_ref)};
}

/// Largest relative sup-norm deviation of the chosen magnet quantities.
inline double max_relative_deviation(const NetworkSolution& a, const NetworkSolution& ref,
                                     std::initializer_list<Waveform MagnetSolution::*> members) {
  double worst = 0.0;
  for (std::size_t m = 0; m < ref.magnets.size(); ++m) {
    for (auto member : members) {
      worst = std::max(worst, relative_deviation(a.magnets[m].*member, ref.magnets[m].*member));
    }
  }
  return worst;
}

/// r_{k+1} < r_k for every k >= 2 (1-based) in every window.
inline bool strictly_decreasing_after_first(const WrReport& r) {
  for (const auto& w : r.windows) {
    for (std::size_t k = 2; k < w.residuals.size(); ++k) {
      if (!(w.residuals[k] < w.residuals[k - 1])) return false;
    }
  }
  return true;
}

}  // namespace check
