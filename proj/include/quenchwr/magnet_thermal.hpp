#pragma once

// Heat balance of one magnet with quench-activated Joule heating:
//     rho c_p dT/dt - d/dx(k dT/dx) = P_s + q sigma_n^-1 J_s^2,   T = T_bath at both ends.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quenchwr/errors.hpp"
#include "quenchwr/fem1d.hpp"
#include "quenchwr/magnet_field.hpp"

namespace quenchwr {

struct ThermalModel {
  Mesh1d mesh;
  CoefficientField rho_cp;       ///< J/(m^3 K)
  CoefficientField k;            ///< W/(m K)
  CoefficientField sigma_n;      ///< normal-state conductivity, S/m (coil elements)
  CoefficientField heat_source;  ///< P_s, W/m^3
  double T_bath = 1.9;

  void validate(const FieldModel& field) const {
    if (!(mesh == field.mesh)) throw ValidationError("thermal mesh differs from field mesh");
    check_field(mesh, rho_cp, "rho_cp", Sign::Positive);
    check_field(mesh, k, "k", Sign::Positive);
    check_field(mesh, sigma_n, "sigma_n");
    check_field(mesh, heat_source, "heat_source");
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      if (field.in_coil(e) && !(sigma_n[e] > 0.0)) {
        throw ValidationError("sigma_n: coil element " + std::to_string(e) + " must be > 0");
      }
    }
    if (!(T_bath > 0.0)) throw ValidationError("T_bath must be positive");
  }

  bool operator==(const ThermalModel&) const = default;
};

/// Forces q = 1 on elements [first_element, last_element) from `time` on.
struct QuenchTrigger {
  double time = 0.0;
  std::size_t first_element = 0;
  std::size_t last_element = 0;

  bool operator==(const QuenchTrigger&) const = default;
};

struct QuenchParams {
  bool enabled = true;
  double T_c0 = 9.2;   ///< K
  double B_c = 14.0;   ///< T
  double J_c = 3e9;    ///< A/m^2
  double dT_q = 0.25;  ///< K, sigmoid width
  std::optional<QuenchTrigger> trigger;

  void validate(double T_bath, std::size_t num_elements) const {
    if (!(T_c0 > T_bath)) throw ValidationError("quench: T_c0 must exceed T_bath");
    if (!(dT_q > 0.0)) throw ValidationError("quench: dT_q must be positive");
    if (!(B_c > 0.0)) throw ValidationError("quench: B_c must be positive");
    if (!(J_c > 0.0)) throw ValidationError("quench: J_c must be positive");
    if (trigger) {
      if (trigger->first_element >= trigger->last_element ||
          trigger->last_element > num_elements) {
        throw ValidationError("quench trigger: element range [" +
                              std::to_string(trigger->first_element) + ", " +
                              std::to_string(trigger->last_element) + ") is empty or out of mesh");
      }
    }
  }

  bool operator==(const QuenchParams&) const = default;
};

struct ThermalState {
  double time = 0.0;
  std::vector<double> T;  ///< nodal temperature, K

  static ThermalState at_bath(const ThermalModel& model, double t0) {
    return {t0, std::vector<double>(model.mesh.num_nodes(), model.T_bath)};
  }

  bool operator==(const ThermalState&) const = default;
};

inline double sigmoid(double xi) {
  if (xi >= 0.0) return 1.0 / (1.0 + std::exp(-xi));
  const double e = std::exp(xi);
  return e / (1.0 + e);
}

/// Current-sharing temperature T_c0 max(0, 1 - |B|/B_c - |J|/J_c).
inline double sharing_temperature(const QuenchParams& p, double B, double J) {
  return p.T_c0 * std::max(0.0, 1.0 - std::abs(B) / p.B_c - std::abs(J) / p.J_c);
}

/// Per-element activation in [0, 1]. Zero outside the coil and when the
/// quench model is disabled.
inline CoefficientField quench_flag(const QuenchParams& p, std::span<const double> chi,
                                    std::span<const double> T, std::span<const double> B,
                                    std::span<const double> J, double t) {
  const std::size_t ne = chi.size();
  if (T.size() != ne + 1 || B.size() != ne || J.size() != ne) {
    throw ValidationError("quench_flag: field sizes do not match the mesh");
  }
  CoefficientField q(ne, 0.0);
  if (!p.enabled) return q;
  for (std::size_t e = 0; e < ne; ++e) {
    if (!(chi[e] > 0.0)) continue;
    const double Te = 0.5 * (T[e] + T[e + 1]);
    q[e] = sigmoid((Te - sharing_temperature(p, B[e], J[e])) / p.dT_q);
  }
  if (p.trigger && t >= p.trigger->time) {
    for (std::size_t e = p.trigger->first_element; e < p.trigger->last_element && e < ne; ++e) {
      if (chi[e] > 0.0) q[e] = 1.0;
    }
  }
  return q;
}

/// P_e = q_e J_e^2 / sigma_n,e
inline CoefficientField joule_power(std::span<const double> q, std::span<const double> J,
                                    std::span<const double> sigma_n) {
  CoefficientField p(q.size(), 0.0);
  for (std::size_t e = 0; e < q.size(); ++e) {
    if (q[e] == 0.0) continue;
    if (!(sigma_n[e] > 0.0)) {
      throw ValidationError("joule_power: element " + std::to_string(e) +
                            " is quenched but has no normal-state conductivity");
    }
    p[e] = q[e] * J[e] * J[e] / sigma_n[e];
  }
  return p;
}

namespace detail {

inline TridiagonalSystem thermal_system(const ThermalModel& model, const ThermalState& s,
                                        std::span<const double> p_joule, double dt) {
  const Tridiagonal mass = assemble_mass(model.mesh, model.rho_cp);
  const Tridiagonal stiff = assemble_stiffness(model.mesh, model.k);
  std::vector<double> rhs = mass.apply(s.T);
  CoefficientField density(model.mesh.num_elements());
  for (std::size_t e = 0; e < density.size(); ++e) density[e] = model.heat_source[e] + p_joule[e];
  const std::vector<double> load = assemble_load(model.mesh, density);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = rhs[i] / dt + load[i];
  return {Tridiagonal::combine(1.0 / dt, mass, 1.0, stiff), std::move(rhs)};
}

}  // namespace detail

/// One implicit-Euler step with T = T_bath held at both ends.
inline ThermalState step_thermal(const ThermalModel& model, const ThermalState& s,
                                 std::span<const double> p_joule, double dt) {
  if (!(dt > 0.0)) throw ValidationError("step_thermal: dt must be positive");
  if (p_joule.size() != model.mesh.num_elements()) {
    throw ValidationError("step_thermal: Joule power has wrong size");
  }
  auto sys = detail::thermal_system(model, s, p_joule, dt);
  std::vector<double> T =
      solve_with_ends(std::move(sys.matrix), std::move(sys.rhs), model.T_bath, model.T_bath);
  return {s.time + dt, std::move(T)};
}

/// Heat entering through the two Dirichlet ends during a step, W per unit
/// cross-section: the boundary-row residuals of the unconstrained system.
inline double boundary_heat_flow(const ThermalModel& model, const ThermalState& before,
                                 const ThermalState& after, std::span<const double> p_joule,
                                 double dt) {
  const auto sys = detail::thermal_system(model, before, p_joule, dt);
  const std::vector<double> lhs = sys.matrix.apply(after.T);
  const std::size_t n = lhs.size();
  return (lhs[0] - sys.rhs[0]) + (lhs[n - 1] - sys.rhs[n - 1]);
}

/// R_t = l_z sum_e q_e chi_e^2 / sigma_n,e h_e over coil elements.
inline double quench_resistance(const ThermalModel& model, const FieldModel& field,
                                std::span<const double> q) {
  double r = 0.0;
  for (std::size_t e = 0; e < q.size(); ++e) {
    if (!field.in_coil(e) || q[e] == 0.0) continue;
    r += q[e] * field.chi[e] * field.chi[e] / model.sigma_n[e] * model.mesh.h(e);
  }
  return field.depth * r;
}

}  // namespace quenchwr
