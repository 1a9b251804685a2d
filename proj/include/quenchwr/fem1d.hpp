#pragma once

// Linear (hat-function) finite elements on an interval. Shared by the field,
// thermal and elastic models, which all reduce to
//     m(x) du/dt - d/dx(c(x) du/dx) = f(x)
// with piecewise-constant coefficients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quenchwr/errors.hpp"

namespace quenchwr {

class Mesh1d {
 public:
  explicit Mesh1d(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 3) {
      throw ValidationError("Mesh1d: at least two elements are required");
    }
    if (nodes_.front() != 0.0) {
      throw ValidationError("Mesh1d: first node must be at x = 0");
    }
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
      if (!(nodes_[k] > nodes_[k - 1]) || !std::isfinite(nodes_[k])) {
        throw ValidationError("Mesh1d: nodes must be finite and strictly increasing (node " +
                              std::to_string(k) + ")");
      }
    }
  }

  static Mesh1d uniform(double length, std::size_t elements) {
    if (!(length > 0.0)) throw ValidationError("Mesh1d::uniform: length must be positive");
    if (elements < 2) throw ValidationError("Mesh1d::uniform: at least two elements are required");
    std::vector<double> nodes(elements + 1);
    for (std::size_t k = 0; k <= elements; ++k) {
      nodes[k] = length * (static_cast<double>(k) / static_cast<double>(elements));
    }
    nodes.back() = length;
    return Mesh1d(std::move(nodes));
  }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return nodes_.size() - 1; }
  double length() const { return nodes_.back(); }
  double x(std::size_t node) const { return nodes_[node]; }
  double h(std::size_t element) const { return nodes_[element + 1] - nodes_[element]; }
  double midpoint(std::size_t element) const {
    return 0.5 * (nodes_[element] + nodes_[element + 1]);
  }
  std::span<const double> nodes() const { return nodes_; }

  bool operator==(const Mesh1d&) const = default;

 private:
  std::vector<double> nodes_;
};

/// One value per element.
using CoefficientField = std::vector<double>;

enum class Sign { NonNegative, Positive };

inline void check_field(const Mesh1d& mesh, std::span<const double> field, const std::string& name,
                        Sign sign = Sign::NonNegative) {
  if (field.size() != mesh.num_elements()) {
    throw ValidationError(name + ": expected " + std::to_string(mesh.num_elements()) +
                          " element values, got " + std::to_string(field.size()));
  }
  for (std::size_t e = 0; e < field.size(); ++e) {
    const double c = field[e];
    const bool ok = std::isfinite(c) && (sign == Sign::Positive ? c > 0.0 : c >= 0.0);
    if (!ok) {
      throw ValidationError(name + ": element " + std::to_string(e) + " has value " +
                            std::to_string(c) +
                            (sign == Sign::Positive ? " (must be > 0)" : " (must be >= 0)"));
    }
  }
}

/// Element-wise product of two fields.
inline CoefficientField multiply(std::span<const double> a, std::span<const double> b) {
  CoefficientField out(a.size());
  for (std::size_t e = 0; e < a.size(); ++e) out[e] = a[e] * b[e];
  return out;
}

/// Element average of a nodal field.
inline CoefficientField element_average(std::span<const double> nodal) {
  CoefficientField out(nodal.size() - 1);
  for (std::size_t e = 0; e + 1 < nodal.size(); ++e) out[e] = 0.5 * (nodal[e] + nodal[e + 1]);
  return out;
}

/// Symmetric-or-not tridiagonal matrix; `lower[i]` is A(i+1, i), `upper[i]`
/// is A(i, i+1).
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : lower(n - 1, 0.0), diag(n, 0.0), upper(n - 1, 0.0) {}

  std::size_t size() const { return diag.size(); }

  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += lower[i - 1] * x[i - 1];
      if (i + 1 < n) s += upper[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }

  /// alpha * A + beta * B
  static Tridiagonal combine(double alpha, const Tridiagonal& a, double beta,
                             const Tridiagonal& b) {
    Tridiagonal out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.diag[i] = alpha * a.diag[i] + beta * b.diag[i];
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      out.lower[i] = alpha * a.lower[i] + beta * b.lower[i];
      out.upper[i] = alpha * a.upper[i] + beta * b.upper[i];
    }
    return out;
  }

  double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      double s = std::abs(diag[i]);
      if (i > 0) s += std::abs(lower[i - 1]);
      if (i + 1 < size()) s += std::abs(upper[i]);
      m = std::max(m, s);
    }
    return m;
  }

  bool operator==(const Tridiagonal&) const = default;
};

struct TridiagonalSystem {
  Tridiagonal matrix;
  std::vector<double> rhs;
};

struct DirichletCondition {
  std::size_t node;
  double value;
};

/// Element contribution (c_e / h_e) [[1, -1], [-1, 1]].
inline Tridiagonal assemble_stiffness(const Mesh1d& mesh, std::span<const double> c) {
  check_field(mesh, c, "stiffness coefficient");
  Tridiagonal k(mesh.num_nodes());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double w = c[e] / mesh.h(e);
    k.diag[e] += w;
    k.diag[e + 1] += w;
    k.upper[e] -= w;
    k.lower[e] -= w;
  }
  return k;
}

/// Consistent mass; element contribution (c_e h_e / 6) [[2, 1], [1, 2]].
inline Tridiagonal assemble_mass(const Mesh1d& mesh, std::span<const double> c) {
  check_field(mesh, c, "mass coefficient");
  Tridiagonal m(mesh.num_nodes());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double w = c[e] * mesh.h(e) / 6.0;
    m.diag[e] += 2.0 * w;
    m.diag[e + 1] += 2.0 * w;
    m.upper[e] += w;
    m.lower[e] += w;
  }
  return m;
}

/// Load vector of a piecewise-constant density: each element adds f_e h_e / 2
/// to both of its nodes.
inline std::vector<double> assemble_load(const Mesh1d& mesh, std::span<const double> f) {
  if (f.size() != mesh.num_elements()) {
    throw ValidationError("load density: expected " + std::to_string(mesh.num_elements()) +
                          " element values, got " + std::to_string(f.size()));
  }
  std::vector<double> b(mesh.num_nodes(), 0.0);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const double w = 0.5 * f[e] * mesh.h(e);
    b[e] += w;
    b[e + 1] += w;
  }
  return b;
}

/// Replaces boundary rows by identity rows and moves the eliminated column
/// into the right-hand side, which keeps the matrix symmetric.
inline TridiagonalSystem apply_dirichlet(TridiagonalSystem sys,
                                         std::span<const DirichletCondition> bcs) {
  const std::size_t n = sys.matrix.size();
  Tridiagonal& a = sys.matrix;
  for (const auto& bc : bcs) {
    if (bc.node != 0 && bc.node != n - 1) {
      throw ValidationError("apply_dirichlet: node " + std::to_string(bc.node) +
                            " is not a boundary node");
    }
    if (bc.node == 0) {
      sys.rhs[1] -= a.lower[0] * bc.value;
      a.lower[0] = 0.0;
      a.upper[0] = 0.0;
      a.diag[0] = 1.0;
      sys.rhs[0] = bc.value;
    } else {
      sys.rhs[n - 2] -= a.upper[n - 2] * bc.value;
      a.upper[n - 2] = 0.0;
      a.lower[n - 2] = 0.0;
      a.diag[n - 1] = 1.0;
      sys.rhs[n - 1] = bc.value;
    }
  }
  return sys;
}

/// Thomas algorithm without pivoting (the assembled systems are SPD after
/// Dirichlet elimination).
inline std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys) {
  const Tridiagonal& a = sys.matrix;
  const std::size_t n = a.size();
  if (sys.rhs.size() != n) throw ValidationError("solve_tridiagonal: rhs size mismatch");
  // pivot i is compared against the magnitude of row i
  auto tiny = [&](std::size_t i) {
    double row = std::abs(a.diag[i]);
    if (i > 0) row += std::abs(a.lower[i - 1]);
    if (i + 1 < n) row += std::abs(a.upper[i]);
    return 1e-14 * (row > 0.0 ? row : 1.0);
  };

  std::vector<double> c(n, 0.0);
  std::vector<double> d(n, 0.0);
  double pivot = a.diag[0];
  if (!(std::abs(pivot) > tiny(0))) {
    throw SolverError("solve_tridiagonal: singular pivot at index 0");
  }
  if (n > 1) c[0] = a.upper[0] / pivot;
  d[0] = sys.rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = a.diag[i] - a.lower[i - 1] * c[i - 1];
    if (!(std::abs(pivot) > tiny(i))) {
      throw SolverError("solve_tridiagonal: singular pivot at index " + std::to_string(i));
    }
    if (i + 1 < n) c[i] = a.upper[i] / pivot;
    d[i] = (sys.rhs[i] - a.lower[i - 1] * d[i - 1]) / pivot;
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

/// Assemble `matrix` with homogeneous-or-not Dirichlet values at both ends and
/// solve.
inline std::vector<double> solve_with_ends(Tridiagonal matrix, std::vector<double> rhs,
                                           double left, double right) {
  const std::size_t n = matrix.size();
  const DirichletCondition bcs[] = {{0, left}, {n - 1, right}};
  return solve_tridiagonal(apply_dirichlet({std::move(matrix), std::move(rhs)}, bcs));
}

}  // namespace quenchwr
