#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "dynlab/numerics/matrix.hpp"

namespace dynlab {

using ScalarFn = std::function<double(const Vector&)>;
using VectorFn = std::function<Vector(const Vector&)>;

/// cbrt(eps) * (1 + ||p||_inf): balances truncation and roundoff for central
/// differences.
inline double default_fd_step(std::span<const double> p) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + norm_inf(p));
}

inline Vector finite_diff_gradient(const ScalarFn& f, const Vector& p,
                                   std::optional<double> step = std::nullopt) {
  const double h = step.value_or(default_fd_step(p));
  if (!(h > 0.0)) throw InputError("finite_diff_gradient: step must be positive");
  Vector g(p.size());
  Vector x = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    x[i] = p[i] + h;
    const double fp = f(x);
    x[i] = p[i] - h;
    const double fm = f(x);
    x[i] = p[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw EvaluationError("finite_diff_gradient: non-finite value near component " +
                            std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian; column i is d f / d p_i.
inline Matrix finite_diff_jacobian(const VectorFn& f, const Vector& p,
                                   std::optional<double> step = std::nullopt) {
  const double h = step.value_or(default_fd_step(p));
  Vector x = p;
  Matrix jac;
  for (std::size_t i = 0; i < p.size(); ++i) {
    x[i] = p[i] + h;
    const Vector fp = f(x);
    x[i] = p[i] - h;
    const Vector fm = f(x);
    x[i] = p[i];
    if (i == 0) jac = Matrix(fp.size(), p.size());
    for (std::size_t r = 0; r < fp.size(); ++r) {
      const double d = (fp[r] - fm[r]) / (2.0 * h);
      if (!std::isfinite(d)) {
        throw EvaluationError("finite_diff_jacobian: non-finite value near component " +
                              std::to_string(i));
      }
      jac(r, i) = d;
    }
  }
  return jac;
}

}  // namespace dynlab
