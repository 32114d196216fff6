#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynlab/errors.hpp"
#include "dynlab/io/csv.hpp"
#include "dynlab/meanfield/graph.hpp"
#include "dynlab/numerics/matrix.hpp"
#include "dynlab/numerics/measure.hpp"
#include "dynlab/numerics/rng.hpp"

namespace dynlab::meanfield {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using ConstState = std::span<const double>;
using OutState = std::span<double>;

/// Particle system x_i' = f_i(x_i) + sum_j a_ij g(x_i, x_j), optionally with a
/// noise coupling h for the stochastic variant.
///
/// Every callback writes its result into `out` (length `dim`). The state of
/// the population is a flat vector of length M * dim.
struct IPSModel {
  std::string name;
  std::size_t dim = 1;
  bool circle = false;

  std::function<void(std::size_t i, ConstState x, OutState out)> intrinsic;
  std::function<void(ConstState xi, ConstState xj, OutState out)> coupling;
  std::function<void(ConstState xi, ConstState xj, OutState out)> noise;

  /// h(x_i, x_j) does not depend on x_j, so the noise sum reduces to the row
  /// sums of the noise weights.
  bool noise_self_only = false;

  /// g(x_i, x_j) = sin(x_j - x_i); allows O(M) sums under uniform weights.
  bool sine_coupling = false;

  /// Replaces the pairwise sum entirely: adds the interaction drift of the
  /// whole population to `out`. The graph weights are not consulted.
  std::function<void(ConstState state, std::size_t M, OutState out)> population_drift;

  std::optional<GraphSpec> default_graph;

  /// Per-particle parameters that must have length 1 or M.
  std::size_t per_particle_size = 0;

  void check_population(std::size_t M) const {
    if (per_particle_size > 1 && per_particle_size != M) {
      throw ConfigError("M", name + " has " + std::to_string(per_particle_size) + " per-particle parameters but M=" +
                                 std::to_string(M));
    }
  }
};

namespace detail {

inline double per_particle(const Vector& v, std::size_t i) { return v.size() == 1 ? v[0] : v[i]; }

inline void require_finite_param(double v, const std::string& key) {
  if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
}

}  // namespace detail

/// Kuramoto oscillators: f_i = omega_i, g = sin(x_j - x_i), all-to-all K.
inline IPSModel kuramoto(double K, Vector omega) {
  detail::require_finite_param(K, "K");
  if (omega.empty()) throw ConfigError("omega", "needs at least one frequency");
  for (double w : omega) detail::require_finite_param(w, "omega");
  IPSModel m;
  m.name = "kuramoto";
  m.circle = true;
  m.per_particle_size = omega.size();
  m.intrinsic = [omega = std::move(omega)](std::size_t i, ConstState, OutState out) {
    out[0] = detail::per_particle(omega, i);
  };
  m.coupling = [](ConstState xi, ConstState xj, OutState out) { out[0] = std::sin(xj[0] - xi[0]); };
  m.sine_coupling = true;
  m.default_graph = GraphSpec::all_to_all(K);
  return m;
}

/// Gradient flow in a confining potential with linear attraction:
/// f = -V'(x), g = x_j - x_i.
inline IPSModel desai_zwanzig(std::function<double(double)> potential_derivative, double K) {
  detail::require_finite_param(K, "K");
  if (!potential_derivative) throw ConfigError("potential", "missing potential derivative");
  IPSModel m;
  m.name = "desai_zwanzig";
  m.intrinsic = [dv = std::move(potential_derivative)](std::size_t, ConstState x, OutState out) { out[0] = -dv(x[0]); };
  m.coupling = [](ConstState xi, ConstState xj, OutState out) { out[0] = xj[0] - xi[0]; };
  m.default_graph = GraphSpec::all_to_all(K);
  return m;
}

/// Double-well derivative V'(x) = x^3 - x.
inline double double_well_derivative(double x) { return x * x * x - x; }

/// Bounded-confidence opinions: g = (x_j - x_i) 1{-c <= x_j - x_i <= d}.
inline IPSModel hegselmann_krause(double K, double c, double d) {
  detail::require_finite_param(K, "K");
  if (!(c >= 0.0)) throw ConfigError("c", "confidence bound must be >= 0");
  if (!(d >= 0.0)) throw ConfigError("d", "confidence bound must be >= 0");
  IPSModel m;
  m.name = "hegselmann_krause";
  m.intrinsic = [](std::size_t, ConstState, OutState out) { out[0] = 0.0; };
  m.coupling = [c, d](ConstState xi, ConstState xj, OutState out) {
    const double diff = xj[0] - xi[0];
    out[0] = (-c <= diff && diff <= d) ? diff : 0.0;
  };
  m.default_graph = GraphSpec::all_to_all(K);
  return m;
}

/// Flocking in `space_dim` dimensions. The particle state is
/// (position, velocity); positions follow velocities and velocities align
/// with weight 1 / (1 + |x_i - x_j|^alpha).
inline IPSModel cucker_smale(double K, double alpha, std::size_t space_dim = 1) {
  detail::require_finite_param(K, "K");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be finite and >= 0");
  if (space_dim == 0) throw ConfigError("space_dim", "must be >= 1");
  IPSModel m;
  m.name = "cucker_smale";
  m.dim = 2 * space_dim;
  const std::size_t d = space_dim;
  m.intrinsic = [d](std::size_t, ConstState x, OutState out) {
    for (std::size_t k = 0; k < d; ++k) {
      out[k] = x[d + k];
      out[d + k] = 0.0;
    }
  };
  m.coupling = [d, alpha](ConstState xi, ConstState xj, OutState out) {
    double dist2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) dist2 += (xi[k] - xj[k]) * (xi[k] - xj[k]);
    const double w = 1.0 / (1.0 + std::pow(std::sqrt(dist2), alpha));
    for (std::size_t k = 0; k < d; ++k) {
      out[k] = 0.0;
      out[d + k] = w * (xj[d + k] - xi[d + k]);
    }
  };
  m.default_graph = GraphSpec::all_to_all(K);
  return m;
}

/// Continuous Hopfield network x_i' = -alpha x_i + sum_j a_ij tanh(x_j) + b_i.
inline IPSModel hopfield_cts(double alpha, Vector b, Matrix A) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be positive");
  if (!A.square() || A.rows() == 0) throw ConfigError("A", "weight matrix must be square and non-empty");
  if (!all_finite(A.data())) throw ConfigError("A", "weight matrix has non-finite entries");
  if (b.empty()) b.assign(A.rows(), 0.0);
  if (b.size() != 1 && b.size() != A.rows()) {
    throw ConfigError("b", "bias has length " + std::to_string(b.size()) + ", expected 1 or " + std::to_string(A.rows()));
  }
  for (double v : b) detail::require_finite_param(v, "b");
  IPSModel m;
  m.name = "hopfield_cts";
  m.per_particle_size = A.rows();
  m.intrinsic = [alpha, b = std::move(b)](std::size_t i, ConstState x, OutState out) {
    out[0] = -alpha * x[0] + detail::per_particle(b, i);
  };
  m.coupling = [](ConstState, ConstState xj, OutState out) { out[0] = std::tanh(xj[0]); };
  m.default_graph = GraphSpec::explicit_matrix(std::move(A));
  return m;
}

/// Softmax attention weights of particle i over the population:
/// exp(M1 x_i . M2 x_j) / sum_l exp(M1 x_i . M2 x_l).
inline Vector transformer_weights(const Matrix& M1, const Matrix& M2, ConstState state, std::size_t M, std::size_t i) {
  const std::size_t d = M1.cols();
  const Vector q = M1 * Vector(state.begin() + static_cast<std::ptrdiff_t>(i * d),
                               state.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  Vector logits(M);
  for (std::size_t j = 0; j < M; ++j) {
    const Vector k = M2 * Vector(state.begin() + static_cast<std::ptrdiff_t>(j * d),
                                 state.begin() + static_cast<std::ptrdiff_t>((j + 1) * d));
    logits[j] = dot(q, k);
  }
  double top = -std::numeric_limits<double>::infinity();
  for (double l : logits) top = std::max(top, l);
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

/// Self-attention dynamics x_i' = sum_j softmax_j(M1 x_i . M2 x_j) M3 x_j with
/// time-constant matrices.
inline IPSModel transformer_ode(Matrix M1, Matrix M2, Matrix M3) {
  const std::size_t d = M1.rows();
  const std::pair<const Matrix*, const char*> checks[] = {{&M1, "M1"}, {&M2, "M2"}, {&M3, "M3"}};
  for (const auto& [mat, key] : checks) {
    if (mat->rows() != d || mat->cols() != d || d == 0) throw ConfigError(key, "must be a non-empty d x d matrix");
    if (!all_finite(mat->data())) throw ConfigError(key, "has non-finite entries");
  }
  IPSModel m;
  m.name = "transformer";
  m.dim = d;
  m.intrinsic = [d](std::size_t, ConstState, OutState out) {
    for (std::size_t k = 0; k < d; ++k) out[k] = 0.0;
  };
  m.population_drift = [M1 = std::move(M1), M2 = std::move(M2), M3 = std::move(M3), d](ConstState state, std::size_t M,
                                                                                       OutState out) {
    std::vector<Vector> values(M);
    for (std::size_t j = 0; j < M; ++j) {
      values[j] = M3 * Vector(state.begin() + static_cast<std::ptrdiff_t>(j * d),
                              state.begin() + static_cast<std::ptrdiff_t>((j + 1) * d));
    }
    for (std::size_t i = 0; i < M; ++i) {
      const Vector w = transformer_weights(M1, M2, state, M, i);
      for (std::size_t j = 0; j < M; ++j)
        for (std::size_t k = 0; k < d; ++k) out[i * d + k] += w[j] * values[j][k];
    }
  };
  m.default_graph = GraphSpec::all_to_all(1.0);
  return m;
}

/// Right-hand side f_i + sum_j w_ij g(x_i, x_j) for the whole population.
inline void ips_drift(const IPSModel& model, const CouplingWeights& w, ConstState state, std::size_t M, OutState out) {
  const std::size_t d = model.dim;
  for (std::size_t i = 0; i < M; ++i) model.intrinsic(i, state.subspan(i * d, d), out.subspan(i * d, d));
  if (model.population_drift) {
    model.population_drift(state, M, out);
    return;
  }
  if (!model.coupling) return;
  if (model.sine_coupling && w.is_uniform()) {
    double S = 0.0, C = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      S += std::sin(state[j]);
      C += std::cos(state[j]);
    }
    for (std::size_t i = 0; i < M; ++i) out[i] += w.uniform * (S * std::cos(state[i]) - C * std::sin(state[i]));
    return;
  }
  Vector g(d), acc(d);
  for (std::size_t i = 0; i < M; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const auto xi = state.subspan(i * d, d);
    for (std::size_t j = 0; j < M; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      model.coupling(xi, state.subspan(j * d, d), g);
      for (std::size_t k = 0; k < d; ++k) acc[k] += wij * g[k];
    }
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] += acc[k];
  }
}

enum class Integrator { RK4, Euler };

struct IPSTrajectory {
  std::size_t M = 0;
  std::size_t dim = 1;
  bool circle = false;
  std::vector<double> times;
  /// Lifted states (no wrapping), one flat vector per recorded time.
  std::vector<Vector> states;

  /// Recorded state with circular coordinates wrapped into [0, 2 pi).
  Vector wrapped(std::size_t k) const {
    Vector s = states.at(k);
    if (circle)
      for (double& x : s) x = std::fmod(std::fmod(x, kTwoPi) + kTwoPi, kTwoPi);
    return s;
  }
  const Vector& final_state() const { return states.back(); }

  io::CsvTable order_parameter_table() const;
};

struct IPSRunOptions {
  Integrator integrator = Integrator::RK4;
  /// Keep every `record_stride`-th step (the last one is always kept).
  std::size_t record_stride = 1;
};

namespace detail {

inline std::size_t step_count(double dt, double T) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("T", "must be nonnegative");
  const double n = T / dt;
  const double r = std::round(n);
  return static_cast<std::size_t>(std::abs(n - r) <= 1e-9 * std::max(1.0, n) ? r : std::ceil(n));
}

inline void check_initial(const IPSModel& model, std::size_t M, const Vector& x0) {
  if (M == 0) throw InputError("population size must be >= 1");
  if (x0.size() != M * model.dim) {
    throw DimensionError("initial state has length " + std::to_string(x0.size()) + ", expected M*dim = " +
                         std::to_string(M * model.dim));
  }
  if (!all_finite(x0)) throw InputError("initial state has non-finite entries");
  model.check_population(M);
}

}  // namespace detail

/// Integrates the deterministic particle system on [0, T] with a step no
/// larger than dt (T / ceil(T / dt)). Circular coordinates are integrated
/// lifted.
inline IPSTrajectory simulate_ips(const IPSModel& model, const GraphSpec& graph, std::size_t M, const Vector& x0,
                                  double dt, double T, const IPSRunOptions& opt = {}) {
  detail::check_initial(model, M, x0);
  if (opt.record_stride == 0) throw ConfigError("record_stride", "must be >= 1");
  const std::size_t steps = detail::step_count(dt, T);
  const double h = steps == 0 ? 0.0 : T / static_cast<double>(steps);
  const CouplingWeights w = graph.deterministic_weights(M);
  const std::size_t n = x0.size();

  IPSTrajectory tr;
  tr.M = M;
  tr.dim = model.dim;
  tr.circle = model.circle;
  tr.times.push_back(0.0);
  tr.states.push_back(x0);

  Vector x = x0, k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto rhs = [&](const Vector& s, Vector& out) {
    std::fill(out.begin(), out.end(), 0.0);
    ips_drift(model, w, s, M, out);
  };
  for (std::size_t s = 0; s < steps; ++s) {
    if (opt.integrator == Integrator::Euler) {
      rhs(x, k1);
      for (std::size_t k = 0; k < n; ++k) x[k] += h * k1[k];
    } else {
      rhs(x, k1);
      for (std::size_t k = 0; k < n; ++k) tmp[k] = x[k] + 0.5 * h * k1[k];
      rhs(tmp, k2);
      for (std::size_t k = 0; k < n; ++k) tmp[k] = x[k] + 0.5 * h * k2[k];
      rhs(tmp, k3);
      for (std::size_t k = 0; k < n; ++k) tmp[k] = x[k] + h * k3[k];
      rhs(tmp, k4);
      for (std::size_t k = 0; k < n; ++k) x[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
    const double t = static_cast<double>(s + 1) * h;
    if (!all_finite(x)) throw DivergenceError(model.name + ": non-finite state at t=" + io::format_real(t), t);
    if ((s + 1) % opt.record_stride == 0 || s + 1 == steps) {
      tr.times.push_back(t);
      tr.states.push_back(x);
    }
  }
  return tr;
}

inline IPSTrajectory simulate_ips(const IPSModel& model, std::size_t M, const Vector& x0, double dt, double T,
                                  const IPSRunOptions& opt = {}) {
  if (!model.default_graph) throw ConfigError("graph", model.name + " has no default graph");
  return simulate_ips(model, *model.default_graph, M, x0, dt, T, opt);
}

struct SDEOptions {
  std::size_t record_stride = 1;
  /// Each Brownian increment is the sum of this many sub-increments of
  /// variance dt / refinement, so a run at dt with refinement r follows the
  /// same path as a run at dt / r with refinement 1.
  std::size_t noise_refinement = 1;
};

/// Euler–Maruyama for
/// dx_i = [f(x_i) + (1/M) sum_j a_ij g(x_i, x_j)] dt + (1/M) sum_j ahat_ij h(x_i, x_j) dW^i
/// where a and ahat are the raw weights of the two graphs. Particle i draws its
/// increments from rng.split(i).
inline IPSTrajectory simulate_sde_ips(const IPSModel& model, const GraphSpec& drift_graph, const GraphSpec& noise_graph,
                                      std::size_t M, const Vector& x0, double dt, double T, const SeededRng& rng,
                                      const SDEOptions& opt = {}) {
  detail::check_initial(model, M, x0);
  if (opt.record_stride == 0) throw ConfigError("record_stride", "must be >= 1");
  if (opt.noise_refinement == 0) throw ConfigError("noise_refinement", "must be >= 1");
  const std::size_t steps = detail::step_count(dt, T);
  const double h = steps == 0 ? 0.0 : T / static_cast<double>(steps);
  const CouplingWeights w = GraphSpec::scaled_by_population(drift_graph.raw_weights(M), M);
  const CouplingWeights wn = GraphSpec::scaled_by_population(noise_graph.raw_weights(M), M);
  const std::size_t d = model.dim;
  const std::size_t n = x0.size();

  Vector noise_rows(M, 0.0);
  if (model.noise_self_only) {
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M && !wn.is_uniform(); ++j) noise_rows[i] += wn(i, j);
    if (wn.is_uniform()) noise_rows.assign(M, wn.uniform * static_cast<double>(M));
  }
  std::vector<SeededRng> streams;
  streams.reserve(M);
  for (std::size_t i = 0; i < M; ++i) streams.push_back(rng.split(i));
  const double sub_sd = std::sqrt(h / static_cast<double>(opt.noise_refinement));

  IPSTrajectory tr;
  tr.M = M;
  tr.dim = d;
  tr.circle = model.circle;
  tr.times.push_back(0.0);
  tr.states.push_back(x0);

  Vector x = x0, drift(n), sigma(n), hv(d), dW(d);
  for (std::size_t s = 0; s < steps; ++s) {
    std::fill(drift.begin(), drift.end(), 0.0);
    ips_drift(model, w, x, M, drift);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    if (model.noise && model.noise_self_only) {
      for (std::size_t i = 0; i < M; ++i) {
        const auto xi = ConstState(x).subspan(i * d, d);
        model.noise(xi, xi, hv);
        for (std::size_t k = 0; k < d; ++k) sigma[i * d + k] = noise_rows[i] * hv[k];
      }
    } else if (model.noise) {
      for (std::size_t i = 0; i < M; ++i) {
        const auto xi = ConstState(x).subspan(i * d, d);
        for (std::size_t j = 0; j < M; ++j) {
          const double wij = wn(i, j);
          if (wij == 0.0) continue;
          model.noise(xi, ConstState(x).subspan(j * d, d), hv);
          for (std::size_t k = 0; k < d; ++k) sigma[i * d + k] += wij * hv[k];
        }
      }
    }
    for (std::size_t i = 0; i < M; ++i) {
      std::fill(dW.begin(), dW.end(), 0.0);
      if (model.noise) {
        for (std::size_t r = 0; r < opt.noise_refinement; ++r)
          for (std::size_t k = 0; k < d; ++k) dW[k] += sub_sd * streams[i].normal();
      }
      for (std::size_t k = 0; k < d; ++k) x[i * d + k] += h * drift[i * d + k] + sigma[i * d + k] * dW[k];
    }
    const double t = static_cast<double>(s + 1) * h;
    if (!all_finite(x)) throw DivergenceError(model.name + ": non-finite state at t=" + io::format_real(t), t);
    if ((s + 1) % opt.record_stride == 0 || s + 1 == steps) {
      tr.times.push_back(t);
      tr.states.push_back(x);
    }
  }
  return tr;
}

/// Equal weights 1/M at the particle positions (first coordinate of each
/// particle); circular positions are wrapped into [0, 2 pi).
inline MeasureAtoms empirical_measure(std::span<const double> state, std::size_t dim = 1, bool circle = false) {
  if (dim == 0 || state.size() % dim != 0 || state.empty()) throw DimensionError("empirical_measure: bad state length");
  const std::size_t M = state.size() / dim;
  MeasureAtoms m;
  m.positions.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    Vector p(state.begin() + static_cast<std::ptrdiff_t>(i * dim), state.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    if (circle)
      for (double& x : p) x = std::fmod(std::fmod(x, kTwoPi) + kTwoPi, kTwoPi);
    m.positions.push_back(std::move(p));
  }
  m.weights.assign(M, 1.0 / static_cast<double>(M));
  return m;
}

/// |mean of exp(i x_j)|.
inline double order_parameter(std::span<const double> phases) {
  if (phases.empty()) throw InputError("order_parameter: no phases");
  double s = 0.0, c = 0.0;
  for (double x : phases) {
    s += std::sin(x);
    c += std::cos(x);
  }
  return std::hypot(s, c) / static_cast<double>(phases.size());
}

inline io::CsvTable IPSTrajectory::order_parameter_table() const {
  if (!circle || dim != 1) throw UnsupportedError("order parameter needs a one-dimensional circular phase space");
  io::CsvTable t({"t", "order_parameter"});
  for (std::size_t k = 0; k < times.size(); ++k) t.add({times[k], order_parameter(states[k])});
  return t;
}

}  // namespace dynlab::meanfield
