#pragma once

// Static axial elasticity of the coil cross-section, clamped at both ends:
//     d/dx(E (du/dx - alpha (T - T_ref))) + f = 0,   u(0) = u(L) = 0.

#include <cstddef>
#include <span>
#include <vector>

#include "quenchwr/errors.hpp"
#include "quenchwr/fem1d.hpp"
#include "quenchwr/magnet_field.hpp"

namespace quenchwr {

struct ElasticModel {
  Mesh1d mesh;
  CoefficientField youngs;     ///< Pa
  CoefficientField expansion;  ///< 1/K
  double T_ref = 1.9;          ///< stress-free temperature, K

  void validate() const {
    check_field(mesh, youngs, "youngs_modulus", Sign::Positive);
    check_field(mesh, expansion, "expansion");
    if (!(T_ref > 0.0)) throw ValidationError("T_ref must be positive");
  }

  bool operator==(const ElasticModel&) const = default;
};

struct ElasticSolution {
  std::vector<double> u;      ///< nodal displacement, m
  CoefficientField stress;    ///< per-element axial stress, Pa
};

/// f_e = chi_e i_m B_e, the axial component of J_s x B in the 1D reduction.
inline CoefficientField lorentz_force_density(const FieldModel& field, const FieldState& s,
                                              double current) {
  const CoefficientField b = flux_density(field, s);
  CoefficientField f(b.size());
  for (std::size_t e = 0; e < f.size(); ++e) f[e] = field.chi[e] * current * b[e];
  return f;
}

inline ElasticSolution solve_elastic(const ElasticModel& model, std::span<const double> T,
                                     std::span<const double> f_lorentz) {
  const Mesh1d& mesh = model.mesh;
  if (T.size() != mesh.num_nodes()) throw ValidationError("solve_elastic: temperature size mismatch");
  std::vector<double> rhs = assemble_load(mesh, f_lorentz);
  const CoefficientField Te = element_average(T);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double thermal = model.youngs[e] * model.expansion[e] * (Te[e] - model.T_ref);
    rhs[e] -= thermal;
    rhs[e + 1] += thermal;
  }
  std::vector<double> u =
      solve_with_ends(assemble_stiffness(mesh, model.youngs), std::move(rhs), 0.0, 0.0);
  CoefficientField stress(mesh.num_elements());
  for (std::size_t e = 0; e < stress.size(); ++e) {
    const double strain = (u[e + 1] - u[e]) / mesh.h(e);
    stress[e] = model.youngs[e] * (strain - model.expansion[e] * (Te[e] - model.T_ref));
  }
  return {std::move(u), std::move(stress)};
}

}  // namespace quenchwr
