#pragma once

// Neural ODEs and neural DDEs between two affine layers:
//   h(0) = W x + b,  h' = f(t, h)  (or F(t, h_t) with delay tau),
//   Phi(x) = W_out h(T) + b_out.
// Both use fixed-step classical RK4 so a step count fully determines the
// output.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dynlab/numerics/matrix.hpp"

namespace dynlab::networks {

using OdeField = std::function<Vector(double t, const Vector& h)>;

struct AffineLift {
  Matrix W;      // m x d
  Vector b;      // m
  Matrix W_out;  // q x m
  Vector b_out;  // q

  std::size_t d() const { return W.cols(); }
  std::size_t m() const { return W.rows(); }
  std::size_t q() const { return W_out.rows(); }

  void validate() const {
    if (b.size() != W.rows()) throw StructuralError("lift bias length != rows of W");
    if (W_out.cols() != W.rows()) {
      throw StructuralError("W_out is " + W_out.shape() + " but the state dimension is " +
                            std::to_string(W.rows()));
    }
    if (b_out.size() != W_out.rows()) throw StructuralError("projection bias length != rows of W_out");
  }

  Vector lift(std::span<const double> x) const {
    if (x.size() != d()) {
      throw StructuralError("input has dimension " + std::to_string(x.size()) + " but W expects " +
                            std::to_string(d()));
    }
    Vector h = W * x;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += b[i];
    return h;
  }

  Vector project(std::span<const double> h) const {
    Vector y = W_out * h;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b_out[i];
    return y;
  }

  /// W = I, W_out = I, zero biases.
  static AffineLift identity(std::size_t m) {
    return {Matrix::identity(m), Vector(m, 0.0), Matrix::identity(m), Vector(m, 0.0)};
  }
};

struct NeuralODESpec {
  AffineLift lift;
  OdeField field;
  double T = 1.0;
  std::size_t steps = 100;

  void validate() const {
    lift.validate();
    if (!(T > 0.0)) throw InputError("neural ODE horizon T must be > 0");
    if (steps < 1) throw InputError("neural ODE step count must be >= 1");
    if (!field) throw InputError("neural ODE has no vector field");
  }
};

namespace detail {

inline void check_state(const Vector& h, std::size_t step) {
  if (!all_finite(h)) {
    throw DivergenceError("non-finite state at step " + std::to_string(step), static_cast<double>(step));
  }
}

inline Vector checked_field(const OdeField& f, double t, const Vector& h, std::size_t m) {
  Vector v = f(t, h);
  if (v.size() != m) {
    throw StructuralError("vector field returned dimension " + std::to_string(v.size()) +
                          ", state has " + std::to_string(m));
  }
  return v;
}

}  // namespace detail

/// Classical RK4 from t0 over `steps` steps of size dt. Returns the final
/// state; `on_step(n, t, h)` is called after every step when provided.
inline Vector rk4_integrate(const OdeField& f, Vector h, double t0, double dt, std::size_t steps,
                            const std::function<void(std::size_t, double, const Vector&)>& on_step = {}) {
  const std::size_t m = h.size();
  Vector tmp(m);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = t0 + static_cast<double>(n) * dt;
    const Vector k1 = detail::checked_field(f, t, h, m);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = h[i] + 0.5 * dt * k1[i];
    const Vector k2 = detail::checked_field(f, t + 0.5 * dt, tmp, m);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = h[i] + 0.5 * dt * k2[i];
    const Vector k3 = detail::checked_field(f, t + 0.5 * dt, tmp, m);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = h[i] + dt * k3[i];
    const Vector k4 = detail::checked_field(f, t + dt, tmp, m);
    for (std::size_t i = 0; i < m; ++i) h[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    detail::check_state(h, n + 1);
    if (on_step) on_step(n + 1, t0 + static_cast<double>(n + 1) * dt, h);
  }
  return h;
}

/// Hidden state h(T) of a neural ODE for input x.
inline Vector node_state(const NeuralODESpec& spec, std::span<const double> x) {
  spec.validate();
  const double dt = spec.T / static_cast<double>(spec.steps);
  return rk4_integrate(spec.field, spec.lift.lift(x), 0.0, dt, spec.steps);
}

inline Vector node_forward(const NeuralODESpec& spec, std::span<const double> x) {
  return spec.lift.project(node_state(spec, x));
}

// ---------------------------------------------------------------------------
// Delay equations

/// Stored solution on the RK4 grid with cubic Hermite dense output.
class DenseHistory {
 public:
  DenseHistory(Vector initial, double dt) : initial_(std::move(initial)), dt_(dt) {}

  void push(Vector h, Vector dh) {
    states_.push_back(std::move(h));
    derivs_.push_back(std::move(dh));
  }
  void set_last_derivative(Vector dh) { derivs_.back() = std::move(dh); }

  std::size_t size() const { return states_.size(); }
  double last_time() const { return static_cast<double>(states_.size() - 1) * dt_; }
  const Vector& last_state() const { return states_.back(); }

  /// h(t) for t <= last_time(); the constant initial function for t <= 0.
  Vector at(double t) const {
    if (t <= 0.0) return initial_;
    const double s = t / dt_;
    std::size_t k = static_cast<std::size_t>(std::floor(s));
    if (k + 1 >= states_.size()) {
      if (k + 1 == states_.size() && s - static_cast<double>(k) < 1e-12) return states_.back();
      k = states_.size() - 2;
    }
    const double u = s - static_cast<double>(k);
    if (u == 0.0) return states_[k];
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    const double h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u);
    const double h11 = u * u * (u - 1);
    Vector out(initial_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = h00 * states_[k][i] + h10 * dt_ * derivs_[k][i] + h01 * states_[k + 1][i] +
               h11 * dt_ * derivs_[k + 1][i];
    }
    return out;
  }

 private:
  Vector initial_;
  double dt_;
  std::vector<Vector> states_;
  std::vector<Vector> derivs_;
};

/// Read-only view of the history segment h_t(s) = h(t + s), s in [-tau, 0],
/// as seen by the vector field during one RK4 stage.
class HistorySegment {
 public:
  HistorySegment(const DenseHistory& past, double t_step, const Vector& h_step, double t_stage,
                 const Vector& h_stage, double tau)
      : past_(past), t_step_(t_step), h_step_(h_step), t_stage_(t_stage), h_stage_(h_stage), tau_(tau) {}

  double tau() const noexcept { return tau_; }
  double time() const noexcept { return t_stage_; }

  /// h(t + s). Offsets inside the current step interpolate linearly between
  /// the step start and the stage state.
  Vector operator()(double s) const {
    if (s > 0.0 || s < -tau_ - 1e-12) {
      throw InputError("history offset " + std::to_string(s) + " outside [-tau, 0]");
    }
    if (s == 0.0) return h_stage_;
    const double target = t_stage_ + s;
    if (target <= t_step_) return past_.at(target);
    const double w = (target - t_step_) / (t_stage_ - t_step_);
    Vector out(h_step_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1 - w) * h_step_[i] + w * h_stage_[i];
    return out;
  }

  /// Current value h(t).
  const Vector& now() const noexcept { return h_stage_; }

 private:
  const DenseHistory& past_;
  double t_step_;
  const Vector& h_step_;
  double t_stage_;
  const Vector& h_stage_;
  double tau_;
};

using DdeField = std::function<Vector(double t, const HistorySegment& h)>;

struct NeuralDDESpec {
  AffineLift lift;
  DdeField field;
  double T = 1.0;
  double tau = 0.0;
  std::size_t steps = 100;

  void validate() const {
    lift.validate();
    if (!(T > 0.0)) throw InputError("neural DDE horizon T must be > 0");
    if (!(tau >= 0.0)) throw InputError("neural DDE delay tau must be >= 0");
    if (steps < 1) throw InputError("neural DDE step count must be >= 1");
    if (!field) throw InputError("neural DDE has no vector field");
  }

  /// Grid step: T/steps, refined so that a step never exceeds tau.
  std::size_t effective_steps() const {
    if (tau > 0.0 && T / static_cast<double>(steps) > tau) {
      return static_cast<std::size_t>(std::ceil(T / tau));
    }
    return steps;
  }
};

/// Method of steps with RK4 and Hermite dense history; the constant initial
/// function is the lifted input.
inline Vector ndde_state(const NeuralDDESpec& spec, std::span<const double> x) {
  spec.validate();
  const std::size_t steps = spec.effective_steps();
  const double dt = spec.T / static_cast<double>(steps);
  const Vector h0 = spec.lift.lift(x);
  const std::size_t m = h0.size();
  DenseHistory history(h0, dt);
  history.push(h0, Vector(m, 0.0));

  auto eval = [&](double t_step, const Vector& h_step, double t_stage, const Vector& h_stage) {
    const HistorySegment seg(history, t_step, h_step, t_stage, h_stage, spec.tau);
    Vector v = spec.field(t_stage, seg);
    if (v.size() != m) {
      throw StructuralError("DDE vector field returned dimension " + std::to_string(v.size()) +
                            ", state has " + std::to_string(m));
    }
    return v;
  };

  Vector h = h0;
  Vector tmp(m);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const Vector k1 = eval(t, h, t, h);
    history.set_last_derivative(k1);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = h[i] + 0.5 * dt * k1[i];
    const Vector k2 = eval(t, h, t + 0.5 * dt, tmp);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = h[i] + 0.5 * dt * k2[i];
    const Vector k3 = eval(t, h, t + 0.5 * dt, tmp);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = h[i] + dt * k3[i];
    const Vector k4 = eval(t, h, t + dt, tmp);
    for (std::size_t i = 0; i < m; ++i) h[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    detail::check_state(h, n + 1);
    history.push(h, k4);  // provisional slope, replaced by the next k1
  }
  return h;
}

inline Vector ndde_forward(const NeuralDDESpec& spec, std::span<const double> x) {
  return spec.lift.project(ndde_state(spec, x));
}

/// DDE field that ignores the past: F(t, h_t) = f(t, h_t(0)).
inline DdeField instantaneous(OdeField f) {
  return [f = std::move(f)](double t, const HistorySegment& h) { return f(t, h.now()); };
}

// ---------------------------------------------------------------------------

/// Depth-L residual network obtained by the explicit Euler discretization of a
/// neural ODE: h_{l+1} = h_l + (T/L) f(l T / L, h_l).
struct EulerResNet {
  AffineLift lift;
  OdeField field;
  double T = 1.0;
  std::size_t depth = 1;

  Vector operator()(std::span<const double> x) const {
    Vector h = lift.lift(x);
    const double delta = T / static_cast<double>(depth);
    for (std::size_t l = 0; l < depth; ++l) {
      const Vector f = field(static_cast<double>(l) * delta, h);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += delta * f[i];
    }
    return lift.project(h);
  }
};

inline EulerResNet euler_resnet_of_node(OdeField f, std::size_t depth, double T, AffineLift lift) {
  if (depth < 1) throw InputError("Euler ResNet depth must be >= 1");
  lift.validate();
  return EulerResNet{std::move(lift), std::move(f), T, depth};
}

}  // namespace dynlab::networks
