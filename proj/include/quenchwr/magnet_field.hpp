#pragma once

// Magnetoquasistatic field of one magnet, reduced to a 1D cross-section:
//     sigma da/dt - d/dx(nu da/dx) = chi i_m,   a(0) = a(L) = 0,
// with B = da/dx and flux linkage Phi = l_z * int chi a dx.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "quenchwr/errors.hpp"
#include "quenchwr/fem1d.hpp"

namespace quenchwr {

struct FieldModel {
  Mesh1d mesh;
  CoefficientField sigma_eddy;  ///< homogenized eddy/coupling conductivity, S/m
  CoefficientField nu;          ///< reluctivity, m/H
  CoefficientField chi;         ///< winding density, 1/m^2 (zero outside the coil)
  double depth = 1.0;           ///< out-of-plane length l_z, m

  void validate() const {
    check_field(mesh, sigma_eddy, "sigma_eddy");
    check_field(mesh, nu, "nu", Sign::Positive);
    check_field(mesh, chi, "chi");
    bool has_coil = false;
    for (double c : chi) has_coil = has_coil || c > 0.0;
    if (!has_coil) throw ValidationError("chi: the magnet has no coil element (chi == 0 everywhere)");
    if (!(depth > 0.0) || !std::isfinite(depth)) throw ValidationError("depth must be positive");
  }

  bool in_coil(std::size_t element) const { return chi[element] > 0.0; }

  bool operator==(const FieldModel&) const = default;
};

struct FieldState {
  double time = 0.0;
  std::vector<double> a;  ///< nodal vector potential, Wb/m

  static FieldState at_rest(const FieldModel& model, double t0) {
    return {t0, std::vector<double>(model.mesh.num_nodes(), 0.0)};
  }

  bool operator==(const FieldState&) const = default;
};

/// One implicit-Euler step: (M_sigma/dt + K_nu) a_new = M_sigma/dt a_old + b_chi i_m.
inline FieldState step_field(const FieldModel& model, const FieldState& s, double current,
                             double dt) {
  if (!(dt > 0.0)) throw ValidationError("step_field: dt must be positive");
  const Tridiagonal mass = assemble_mass(model.mesh, model.sigma_eddy);
  const Tridiagonal stiff = assemble_stiffness(model.mesh, model.nu);
  std::vector<double> rhs = mass.apply(s.a);
  const std::vector<double> load = assemble_load(model.mesh, model.chi);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = rhs[i] / dt + load[i] * current;
  std::vector<double> a =
      solve_with_ends(Tridiagonal::combine(1.0 / dt, mass, 1.0, stiff), std::move(rhs), 0.0, 0.0);
  return {s.time + dt, std::move(a)};
}

/// Stationary solve K_nu a = b_chi i_m.
inline std::vector<double> static_field(const FieldModel& model, double current) {
  std::vector<double> rhs = assemble_load(model.mesh, model.chi);
  for (double& r : rhs) r *= current;
  return solve_with_ends(assemble_stiffness(model.mesh, model.nu), std::move(rhs), 0.0, 0.0);
}

/// Trapezoidal integral of chi * a, exact for the linear interpolant.
inline double flux_linkage(const FieldModel& model, const FieldState& s) {
  double phi = 0.0;
  for (std::size_t e = 0; e < model.mesh.num_elements(); ++e) {
    phi += model.chi[e] * model.mesh.h(e) * 0.5 * (s.a[e] + s.a[e + 1]);
  }
  return model.depth * phi;
}

/// Per-element B = da/dx.
inline CoefficientField flux_density(const FieldModel& model, const FieldState& s) {
  CoefficientField b(model.mesh.num_elements());
  for (std::size_t e = 0; e < b.size(); ++e) b[e] = (s.a[e + 1] - s.a[e]) / model.mesh.h(e);
  return b;
}

/// Static inductance Phi / i for a unit current. Positive for any valid model.
inline double extract_inductance(const FieldModel& model) {
  model.validate();
  FieldState unit{0.0, static_field(model, 1.0)};
  return flux_linkage(model, unit);
}

/// Magnetic energy W = 1/2 a^T K_nu a l_z.
inline double field_energy(const FieldModel& model, const FieldState& s) {
  const std::vector<double> ka = assemble_stiffness(model.mesh, model.nu).apply(s.a);
  double w = 0.0;
  for (std::size_t i = 0; i < ka.size(); ++i) w += s.a[i] * ka[i];
  return 0.5 * w * model.depth;
}

/// Eddy-current dissipation of one step, ((a_new - a_old)/dt)^T M_sigma (...) l_z.
inline double eddy_power(const FieldModel& model, const FieldState& before, const FieldState& after,
                         double dt) {
  std::vector<double> rate(before.a.size());
  for (std::size_t i = 0; i < rate.size(); ++i) rate[i] = (after.a[i] - before.a[i]) / dt;
  const std::vector<double> mr = assemble_mass(model.mesh, model.sigma_eddy).apply(rate);
  double p = 0.0;
  for (std::size_t i = 0; i < rate.size(); ++i) p += rate[i] * mr[i];
  return p * model.depth;
}

/// Per-element eddy loss density sigma (da/dt)^2, averaged over the element.
inline CoefficientField eddy_loss_density(const FieldModel& model, const FieldState& before,
                                          const FieldState& after, double dt) {
  CoefficientField p(model.mesh.num_elements());
  for (std::size_t e = 0; e < p.size(); ++e) {
    const double l = (after.a[e] - before.a[e]) / dt;
    const double r = (after.a[e + 1] - before.a[e + 1]) / dt;
    p[e] = model.sigma_eddy[e] * (l * l + l * r + r * r) / 3.0;
  }
  return p;
}

}  // namespace quenchwr
