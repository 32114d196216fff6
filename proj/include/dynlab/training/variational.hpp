#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dynlab/io/csv.hpp"
#include "dynlab/numerics/matrix.hpp"

namespace dynlab::training {

/// One differentiable stage x -> f(x) with its Jacobian actions.
struct Stage {
  std::function<Vector(const Vector&)> apply;
  /// J(x) v
  std::function<Vector(const Vector&, const Vector&)> jvp;
  /// J(x)^T c
  std::function<Vector(const Vector&, const Vector&)> vjp;
};

/// Scalar stage from f and f'.
inline Stage scalar_stage(std::function<double(double)> f, std::function<double(double)> df) {
  return {[f](const Vector& x) { return Vector{f(x[0])}; },
          [df](const Vector& x, const Vector& v) { return Vector{df(x[0]) * v[0]}; },
          [df](const Vector& x, const Vector& c) { return Vector{df(x[0]) * c[0]}; }};
}

/// Stage x -> x + dt F(x), one explicit Euler step of an ODE whose Jacobian is
/// DF; its Jacobian is I + dt DF(x).
inline Stage euler_stage(std::function<Vector(const Vector&)> F, std::function<Matrix(const Vector&)> DF, double dt) {
  return {[F, dt](const Vector& x) {
            Vector y = x;
            axpy(dt, F(x), y);
            return y;
          },
          [DF, dt](const Vector& x, const Vector& v) {
            Vector y = v;
            axpy(dt, DF(x) * v, y);
            return y;
          },
          [DF, dt](const Vector& x, const Vector& c) {
            Vector y = c;
            axpy(dt, DF(x).transpose_times(c), y);
            return y;
          }};
}

enum class PropagationMode { Forward, Reverse };

struct Propagation {
  Vector output;
  /// Forward: J v. Reverse: J^T c.
  Vector derivative;
};

/// Chain rule through `stages` starting at x0. Forward mode pushes `seed` as
/// a tangent in stage order; reverse mode pulls `seed` as a cotangent back
/// from the output after a forward pass that stores the intermediates.
inline Propagation variational_propagate(const std::vector<Stage>& stages, const Vector& x0, const Vector& seed,
                                         PropagationMode mode) {
  std::vector<Vector> xs{x0};
  Vector tangent = seed;
  for (const auto& s : stages) {
    if (mode == PropagationMode::Forward) tangent = s.jvp(xs.back(), tangent);
    xs.push_back(s.apply(xs.back()));
  }
  if (mode == PropagationMode::Forward) return {xs.back(), tangent};
  Vector cot = seed;
  for (std::size_t k = stages.size(); k-- > 0;) cot = stages[k].vjp(xs[k], cot);
  return {xs.back(), cot};
}

/// Full Jacobian assembled column by column from forward mode.
inline Matrix forward_jacobian(const std::vector<Stage>& stages, const Vector& x0) {
  Matrix J;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    Vector e(x0.size(), 0.0);
    e[i] = 1.0;
    const auto p = variational_propagate(stages, x0, e, PropagationMode::Forward);
    if (i == 0) J = Matrix(p.derivative.size(), x0.size());
    J.set_col(i, p.derivative);
  }
  return J;
}

struct VanishingGradientTrace {
  std::vector<double> t;
  std::vector<Vector> p;
  std::vector<Vector> exact;
  /// Time at which |p_i| first falls to |p_i(0)| / e, interpolated
  /// log-linearly between grid points; NaN if never reached.
  Vector decay_times;

  io::CsvTable table() const {
    io::CsvTable out({"t", "p1", "p2", "exact1", "exact2"});
    for (std::size_t k = 0; k < t.size(); ++k) out.add({t[k], p[k][0], p[k][1], exact[k][0], exact[k][1]});
    return out;
  }
};

/// Gradient flow p' = A p of L(p) = p1^2 / 2 + epsilon p2^2 / 2, i.e.
/// A = diag(-1, -epsilon), integrated by RK4 and compared to the exact
/// exponentials.
inline VanishingGradientTrace vanishing_gradient_demo(double epsilon, double horizon, double dt,
                                                      Vector p0 = Vector{1.0, 1.0}) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw InputError("vanishing_gradient_demo: need 0 < epsilon <= 1");
  if (!(horizon >= 0.0) || !(dt > 0.0)) throw InputError("vanishing_gradient_demo: need horizon >= 0, dt > 0");
  if (p0.size() != 2) throw DimensionError("vanishing_gradient_demo: p0 must have two components");
  const Vector rates{-1.0, -epsilon};
  auto field = [&](const Vector& p) { return Vector{rates[0] * p[0], rates[1] * p[1]}; };
  const std::size_t steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-12));
  const double h = steps == 0 ? 0.0 : horizon / static_cast<double>(steps);
  VanishingGradientTrace out;
  Vector p = p0;
  for (std::size_t n = 0;; ++n) {
    const double t = static_cast<double>(n) * h;
    out.t.push_back(t);
    out.p.push_back(p);
    out.exact.push_back({p0[0] * std::exp(rates[0] * t), p0[1] * std::exp(rates[1] * t)});
    if (n == steps) break;
    const Vector k1 = field(p);
    const Vector k2 = field(p + (0.5 * h) * k1);
    const Vector k3 = field(p + (0.5 * h) * k2);
    const Vector k4 = field(p + h * k3);
    for (std::size_t i = 0; i < 2; ++i) p[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  out.decay_times = Vector(2, std::nan(""));
  for (std::size_t i = 0; i < 2; ++i) {
    const double target = std::abs(p0[i]) / std::exp(1.0);
    for (std::size_t k = 1; k < out.t.size(); ++k) {
      const double a = std::abs(out.p[k - 1][i]), b = std::abs(out.p[k][i]);
      if (b <= target && a > target) {
        const double frac = (std::log(a) - std::log(target)) / (std::log(a) - std::log(b));
        out.decay_times[i] = out.t[k - 1] + frac * (out.t[k] - out.t[k - 1]);
        break;
      }
    }
  }
  return out;
}

}  // namespace dynlab::training
