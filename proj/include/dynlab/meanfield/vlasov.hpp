#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dynlab/errors.hpp"
#include "dynlab/io/csv.hpp"
#include "dynlab/meanfield/ips.hpp"
#include "dynlab/numerics/measure.hpp"
#include "dynlab/numerics/quadrature.hpp"
#include "dynlab/numerics/rng.hpp"

namespace dynlab::meanfield {

inline constexpr double kMassTol = 1e-9;

/// Cell averages of a density on the periodic grid [0, 2 pi), one component
/// per frequency atom (omega_r, zeta_r). Each component has unit mass.
struct DensityGrid {
  std::size_t n_cells = 0;
  Vector omegas{0.0};
  Vector zetas{1.0};
  std::vector<Vector> u;

  double dx() const { return kTwoPi / static_cast<double>(n_cells); }
  double left(std::size_t k) const { return static_cast<double>(k) * dx(); }
  double center(std::size_t k) const { return (static_cast<double>(k) + 0.5) * dx(); }
  std::size_t components() const { return u.size(); }

  double mass(std::size_t r) const {
    double s = 0.0;
    for (double v : u.at(r)) s += v;
    return s * dx();
  }

  void validate() const {
    if (n_cells < 2) throw InputError("DensityGrid: needs at least 2 cells");
    if (omegas.size() != zetas.size() || u.size() != omegas.size() || u.empty()) {
      throw DimensionError("DensityGrid: " + std::to_string(omegas.size()) + " frequencies, " +
                           std::to_string(zetas.size()) + " weights, " + std::to_string(u.size()) + " components");
    }
    double zsum = 0.0;
    for (double z : zetas) {
      if (!(z >= 0.0)) throw InputError("DensityGrid: negative frequency weight");
      zsum += z;
    }
    if (std::abs(zsum - 1.0) > kMassTol) throw InputError("DensityGrid: frequency weights sum to " + io::format_real(zsum));
    for (std::size_t r = 0; r < u.size(); ++r) {
      if (u[r].size() != n_cells) throw DimensionError("DensityGrid: component length differs from n_cells");
      for (double v : u[r])
        if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("DensityGrid: negative or non-finite cell value");
      if (std::abs(mass(r) - 1.0) > kMassTol) {
        throw InputError("DensityGrid: component " + std::to_string(r) + " has mass " + io::format_real(mass(r)));
      }
    }
  }

  /// Mixture over frequency components as atoms at the cell centers.
  MeasureAtoms atoms() const {
    MeasureAtoms m;
    m.positions.reserve(n_cells);
    m.weights.assign(n_cells, 0.0);
    for (std::size_t k = 0; k < n_cells; ++k) m.positions.push_back(Vector{center(k)});
    for (std::size_t r = 0; r < u.size(); ++r)
      for (std::size_t k = 0; k < n_cells; ++k) m.weights[k] += zetas[r] * u[r][k] * dx();
    return m;
  }

  /// Snapshot of component r as columns x (cell center) and u.
  io::CsvTable table(std::size_t r = 0) const {
    io::CsvTable t({"x", "u"});
    for (std::size_t k = 0; k < n_cells; ++k) t.add({center(k), u.at(r)[k]});
    return t;
  }

  /// Cell averages of `density` (Gauss–Legendre per cell), normalized to unit
  /// mass, replicated for every frequency atom.
  static DensityGrid from_function(const std::function<double(double)>& density, std::size_t n_cells,
                                   Vector omegas = {0.0}, Vector zetas = {1.0}, std::size_t order = 4) {
    DensityGrid g;
    g.n_cells = n_cells;
    g.omegas = std::move(omegas);
    g.zetas = std::move(zetas);
    if (n_cells < 2) throw InputError("DensityGrid: needs at least 2 cells");
    const QuadratureRule q = gauss_legendre_unit(order);
    Vector avg(n_cells);
    double total = 0.0;
    for (std::size_t k = 0; k < n_cells; ++k) {
      double a = 0.0;
      for (std::size_t p = 0; p < order; ++p) a += q.weights[p] * density(g.left(k) + q.nodes[p] * g.dx());
      if (!(a >= 0.0) || !std::isfinite(a)) throw InputError("DensityGrid: density is negative or non-finite near x=" + io::format_real(g.center(k)));
      avg[k] = a;
      total += a * g.dx();
    }
    if (!(total > 0.0)) throw InputError("DensityGrid: density has zero mass");
    for (double& v : avg) v /= total;
    g.u.assign(g.omegas.size(), avg);
    g.validate();
    return g;
  }
};

/// Unnormalized von Mises bump exp(kappa cos(x - mu)).
inline std::function<double(double)> von_mises_bump(double mu, double kappa) {
  return [mu, kappa](double x) { return std::exp(kappa * (std::cos(x - mu) - 1.0)); };
}

inline std::function<double(double)> uniform_density() {
  return [](double) { return 1.0 / kTwoPi; };
}

/// Order parameter of the mixture density: modulus of its first circular
/// moment, integrated exactly per cell.
inline double order_parameter(const DensityGrid& g) {
  double s = 0.0, c = 0.0;
  for (std::size_t r = 0; r < g.components(); ++r) {
    for (std::size_t k = 0; k < g.n_cells; ++k) {
      const double a = g.left(k), b = a + g.dx();
      s += g.zetas[r] * g.u[r][k] * (std::cos(a) - std::cos(b));
      c += g.zetas[r] * g.u[r][k] * (std::sin(b) - std::sin(a));
    }
  }
  return std::hypot(s, c);
}

struct VlasovTrajectory {
  std::vector<double> times;
  std::vector<DensityGrid> snapshots;
  /// Largest per-step change of any component mass.
  double max_mass_step_error = 0.0;
  double dt_used = 0.0;
  std::size_t steps = 0;

  io::CsvTable order_parameter_table() const {
    io::CsvTable t({"t", "order_parameter"});
    for (std::size_t k = 0; k < times.size(); ++k) t.add({times[k], order_parameter(snapshots[k])});
    return t;
  }
};

struct VlasovOptions {
  /// Keep every `record_stride`-th step (the last one is always kept).
  std::size_t record_stride = 1;
  /// Record at multiples of this time instead of by stride (0 disables).
  double record_interval = 0.0;
};

/// Upwind finite volumes for u_t + (u V[u])_x = 0 with
/// V[u](x) = omega + K integral sin(y - x) u(y) dy, the integral taken over
/// the frequency mixture. V = omega + K (S cos x - C sin x) where S and C are
/// the exact integrals of sin and cos against the piecewise-constant density.
inline VlasovTrajectory vlasov_kuramoto_solve(DensityGrid grid, double K, double T, double dt,
                                              const VlasovOptions& opt = {}) {
  grid.validate();
  if (!std::isfinite(K)) throw ConfigError("K", "must be finite");
  if (opt.record_stride == 0) throw ConfigError("record_stride", "must be >= 1");
  const std::size_t steps = detail::step_count(dt, T);
  const double h = steps == 0 ? 0.0 : T / static_cast<double>(steps);
  const std::size_t n = grid.n_cells;
  const std::size_t R = grid.components();
  const double dx = grid.dx();
  const double ratio = h / dx;

  Vector sin_face(n), cos_face(n), dcos(n), dsin(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = grid.left(k), b = grid.left(k + 1);
    sin_face[k] = std::sin(b);
    cos_face[k] = std::cos(b);
    dcos[k] = std::cos(a) - std::cos(b);
    dsin[k] = std::sin(b) - std::sin(a);
  }
  std::size_t interval_steps = 0;
  if (opt.record_interval > 0.0) interval_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.record_interval / h)));

  VlasovTrajectory tr;
  tr.dt_used = h;
  tr.steps = steps;
  tr.times.push_back(0.0);
  tr.snapshots.push_back(grid);

  Vector flux(n);
  std::vector<double> V(n);
  for (std::size_t s = 0; s < steps; ++s) {
    double S = 0.0, C = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      double sr = 0.0, cr = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        sr += grid.u[r][k] * dcos[k];
        cr += grid.u[r][k] * dsin[k];
      }
      S += grid.zetas[r] * sr;
      C += grid.zetas[r] * cr;
    }
    for (std::size_t r = 0; r < R; ++r) {
      double vmax = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        V[k] = grid.omegas[r] + K * (S * cos_face[k] - C * sin_face[k]);
        vmax = std::max(vmax, std::abs(V[k]));
      }
      if (h > 0.5 * dx / vmax) {
        throw InputError("vlasov_kuramoto_solve: CFL condition violated at t=" + io::format_real(static_cast<double>(s) * h) +
                         "; use dt <= " + io::format_real(0.5 * dx / vmax));
      }
      auto& u = grid.u[r];
      const double mass_before = grid.mass(r);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t right = k + 1 == n ? 0 : k + 1;
        flux[k] = V[k] > 0.0 ? V[k] * u[k] : V[k] * u[right];
      }
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t prev = k == 0 ? n - 1 : k - 1;
        u[k] -= ratio * (flux[k] - flux[prev]);
      }
      tr.max_mass_step_error = std::max(tr.max_mass_step_error, std::abs(grid.mass(r) - mass_before));
    }
    const double t = static_cast<double>(s + 1) * h;
    for (const auto& comp : grid.u)
      if (!all_finite(comp)) throw DivergenceError("vlasov_kuramoto_solve: non-finite density at t=" + io::format_real(t), t);
    const bool keep = interval_steps > 0 ? (s + 1) % interval_steps == 0 : (s + 1) % opt.record_stride == 0;
    if (keep || s + 1 == steps) {
      tr.times.push_back(t);
      tr.snapshots.push_back(grid);
    }
  }
  return tr;
}

/// Largest admissible step for the initial velocity field, halved for margin
/// against the velocity growing during the run.
inline double suggested_vlasov_dt(const DensityGrid& g, double K) {
  double vmax = 0.0;
  for (double w : g.omegas) vmax = std::max(vmax, std::abs(w));
  vmax += std::abs(K);
  return vmax == 0.0 ? 0.1 : 0.25 * g.dx() / vmax;
}

/// Draws from component r of the grid density by inverting its
/// piecewise-linear CDF.
inline double sample_phase(const DensityGrid& g, std::size_t r, SeededRng& rng) {
  const auto& u = g.u.at(r);
  double total = 0.0;
  for (double v : u) total += v;
  double target = rng.uniform() * total;
  for (std::size_t k = 0; k < g.n_cells; ++k) {
    if (target < u[k] || k + 1 == g.n_cells) {
      const double frac = u[k] > 0.0 ? std::clamp(target / u[k], 0.0, 1.0) : 0.5;
      return g.left(k) + frac * g.dx();
    }
    target -= u[k];
  }
  return g.center(g.n_cells - 1);
}

/// Phases at the quantiles (i + 1/2) / M of component r.
inline Vector density_quantiles(const DensityGrid& g, std::size_t M, std::size_t r = 0) {
  const auto& u = g.u.at(r);
  double total = 0.0;
  for (double v : u) total += v;
  Vector out;
  out.reserve(M);
  std::size_t k = 0;
  double below = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    const double target = (static_cast<double>(i) + 0.5) / static_cast<double>(M) * total;
    while (k + 1 < g.n_cells && below + u[k] <= target) below += u[k++];
    const double frac = u[k] > 0.0 ? std::clamp((target - below) / u[k], 0.0, 1.0) : 0.5;
    out.push_back(g.left(k) + frac * g.dx());
  }
  return out;
}

/// Particle population drawn from the grid: frequency atom by zeta, phase
/// from that component.
struct SampledPopulation {
  Vector phases;
  Vector omegas;
};

inline SampledPopulation sample_population(const DensityGrid& g, std::size_t M, SeededRng& rng) {
  SampledPopulation p;
  p.phases.reserve(M);
  p.omegas.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    std::size_t r = 0;
    if (g.components() > 1) {
      double v = rng.uniform();
      while (r + 1 < g.components() && v >= g.zetas[r]) v -= g.zetas[r++];
    }
    p.omegas.push_back(g.omegas[r]);
    p.phases.push_back(sample_phase(g, r, rng));
  }
  return p;
}

inline double circular_w1(const MeasureAtoms& a, const MeasureAtoms& b) {
  return wasserstein1(a, b, Geometry::circle(kTwoPi));
}

struct ConvergenceConfig {
  std::vector<std::size_t> Ms{100, 400, 1600};
  std::size_t seeds = 10;
  double K = 1.0;
  double T = 3.0;
  double particle_dt = 0.01;
  double sample_interval = 0.05;
  std::size_t n_cells = 4096;
  double bump_center = std::numbers::pi;
  double bump_kappa = 2.0;
  Vector omegas{0.0};
  Vector zetas{1.0};
  std::uint64_t seed = 0;
  /// Place particles at density quantiles instead of sampling (one run per M).
  bool quantile_init = false;
};

struct ConvergenceRow {
  std::size_t M = 0;
  double sup_w1 = 0.0;
  std::vector<double> per_seed;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  std::size_t n_cells = 0;
  double vlasov_dt = 0.0;

  io::CsvTable table() const {
    io::CsvTable t({"M", "sup_w1"});
    for (const auto& r : rows) t.add({r.M, r.sup_w1});
    return t;
  }
  /// Number of adjacent pairs where the average does not decrease.
  std::size_t inversions() const {
    std::size_t n = 0;
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (!(rows[k].sup_w1 < rows[k - 1].sup_w1)) ++n;
    return n;
  }
};

/// For each M: particles (RK4, all-to-all Kuramoto) against the Vlasov
/// solution from the same initial density, sup over sampled times of the
/// circular W1 distance, averaged over seeds. Seed s of population size M uses
/// stream rng(seed).split(M).split(s).
inline ConvergenceStudy meanfield_convergence_study(const ConvergenceConfig& cfg) {
  if (cfg.Ms.empty()) throw ConfigError("Ms", "needs at least one population size");
  if (cfg.seeds == 0) throw ConfigError("seeds", "must be >= 1");
  if (!(cfg.sample_interval > 0.0)) throw ConfigError("sample_interval", "must be positive");
  const DensityGrid init = DensityGrid::from_function(von_mises_bump(cfg.bump_center, cfg.bump_kappa), cfg.n_cells,
                                                      cfg.omegas, cfg.zetas);
  const double vdt = suggested_vlasov_dt(init, cfg.K);
  VlasovOptions vopt;
  vopt.record_interval = cfg.sample_interval;
  const VlasovTrajectory density = vlasov_kuramoto_solve(init, cfg.K, cfg.T, vdt, vopt);
  std::vector<MeasureAtoms> density_atoms;
  for (const auto& s : density.snapshots) density_atoms.push_back(s.atoms());

  ConvergenceStudy study;
  study.n_cells = cfg.n_cells;
  study.vlasov_dt = density.dt_used;
  const SeededRng root(cfg.seed);
  for (std::size_t M : cfg.Ms) {
    if (M == 0) throw ConfigError("Ms", "population sizes must be >= 1");
    ConvergenceRow row;
    row.M = M;
    const std::size_t runs = cfg.quantile_init ? 1 : cfg.seeds;
    for (std::size_t s = 0; s < runs; ++s) {
      SampledPopulation pop;
      if (cfg.quantile_init) {
        if (init.components() != 1) throw ConfigError("quantile_init", "needs a single frequency");
        pop.phases = density_quantiles(init, M);
        pop.omegas.assign(M, init.omegas[0]);
      } else {
        SeededRng rng = root.split(M).split(s);
        pop = sample_population(init, M, rng);
      }
      const IPSModel model = kuramoto(cfg.K, pop.omegas);
      double sup = 0.0;
      Vector x = pop.phases;
      double t = 0.0;
      for (std::size_t k = 0; k < density.times.size(); ++k) {
        const double dt_span = density.times[k] - t;
        if (dt_span > 0.0) {
          x = simulate_ips(model, M, x, std::min(cfg.particle_dt, dt_span), dt_span).final_state();
          t = density.times[k];
        }
        sup = std::max(sup, circular_w1(empirical_measure(x, 1, true), density_atoms[k]));
      }
      row.per_seed.push_back(sup);
    }
    double acc = 0.0;
    for (double v : row.per_seed) acc += v;
    row.sup_w1 = acc / static_cast<double>(row.per_seed.size());
    study.rows.push_back(std::move(row));
  }
  return study;
}

struct DobrushinRow {
  double t = 0.0;
  double w1 = 0.0;
  double bound = 0.0;
};

struct DobrushinReport {
  std::vector<DobrushinRow> rows;
  double L = 0.0;
  double tol = 0.05;
  bool degenerate = false;
  bool holds = true;
  double max_ratio = 0.0;

  io::CsvTable table() const {
    io::CsvTable t({"t", "w1", "bound"});
    for (const auto& r : rows) t.add({r.t, r.w1, r.bound});
    return t;
  }
};

/// Evolves both densities with the Vlasov solver and compares W1(t) with
/// e^{2 L t} W1(0). With W1(0) = 0 the report is degenerate and only checks
/// that W1(t) stays below `degenerate_tol`.
inline DobrushinReport dobrushin_check(const DensityGrid& a, const DensityGrid& b, double K, double T, double dt, double L,
                                       const VlasovOptions& opt = {}, double tol = 0.05, double degenerate_tol = 1e-9) {
  if (a.n_cells != b.n_cells) throw DimensionError("dobrushin_check: grids differ in size");
  if (!(L >= 0.0)) throw ConfigError("L", "Lipschitz constant must be >= 0");
  const VlasovTrajectory ta = vlasov_kuramoto_solve(a, K, T, dt, opt);
  const VlasovTrajectory tb = vlasov_kuramoto_solve(b, K, T, dt, opt);
  DobrushinReport rep;
  rep.L = L;
  rep.tol = tol;
  const double w0 = circular_w1(ta.snapshots.front().atoms(), tb.snapshots.front().atoms());
  rep.degenerate = w0 == 0.0;
  for (std::size_t k = 0; k < ta.times.size(); ++k) {
    const double t = ta.times[k];
    const double w = circular_w1(ta.snapshots[k].atoms(), tb.snapshots[k].atoms());
    const double bound = std::exp(2.0 * L * t) * w0;
    rep.rows.push_back({t, w, bound});
    if (rep.degenerate) {
      if (w > degenerate_tol) rep.holds = false;
    } else {
      rep.max_ratio = std::max(rep.max_ratio, w / bound);
      if (w > bound * (1.0 + tol)) rep.holds = false;
    }
  }
  return rep;
}

}  // namespace dynlab::meanfield
