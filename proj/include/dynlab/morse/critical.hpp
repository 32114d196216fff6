#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dynlab/io/csv.hpp"
#include "dynlab/numerics/finite_diff.hpp"
#include "dynlab/numerics/linalg.hpp"
#include "dynlab/numerics/rng.hpp"

namespace dynlab::morse {

/// Scalar field Psi: R^d -> R. When `gradient` is empty, central finite
/// differences of `value` are used.
struct ScalarField {
  std::size_t dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;

  Vector grad(const Vector& x) const {
    if (gradient) return gradient(x);
    return finite_diff_gradient(value, x);
  }

  /// Central differences of the gradient, symmetrized.
  Matrix hessian(const Vector& x) const {
    const double h = default_fd_step(x);
    Matrix H(dim, dim);
    Vector p = x;
    for (std::size_t j = 0; j < dim; ++j) {
      p[j] = x[j] + h;
      const Vector gp = grad(p);
      p[j] = x[j] - h;
      const Vector gm = grad(p);
      p[j] = x[j];
      for (std::size_t i = 0; i < dim; ++i) H(i, j) = (gp[i] - gm[i]) / (2.0 * h);
    }
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = i + 1; j < dim; ++j) {
        const double s = 0.5 * (H(i, j) + H(j, i));
        H(i, j) = H(j, i) = s;
      }
    }
    return H;
  }
};

struct Box {
  Vector lo;
  Vector hi;

  static Box cube(std::size_t d, double half_width) {
    return {Vector(d, -half_width), Vector(d, half_width)};
  }

  std::size_t dim() const { return lo.size(); }

  void validate() const {
    if (lo.size() != hi.size() || lo.empty()) throw InputError("search box bounds must have equal nonzero length");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!(hi[i] > lo[i])) throw InputError("search box is degenerate in coordinate " + std::to_string(i));
    }
  }

  bool contains(const Vector& x, double slack = 0.0) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      const double pad = slack * (hi[i] - lo[i]);
      if (x[i] < lo[i] - pad || x[i] > hi[i] + pad) return false;
    }
    return true;
  }
};

struct SearchOptions {
  std::size_t starts = 64;
  double grad_tol = 1e-8;
  double degen_tol = 1e-6;
  double merge_radius = 1e-4;
  double grad_floor = 1e-5;
  std::size_t max_iterations = 200;
  std::size_t grid_budget = 20000;
};

struct CriticalPoint {
  Vector location;
  double gradient_norm = 0.0;
  Vector hessian_eigenvalues;
  bool degenerate = false;

  double min_abs_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : hessian_eigenvalues) m = std::min(m, std::abs(v));
    return m;
  }
  double max_abs_eigenvalue() const {
    double m = 0.0;
    for (double v : hessian_eigenvalues) m = std::max(m, std::abs(v));
    return m;
  }
};

struct CriticalSearch {
  std::vector<CriticalPoint> points;
  std::size_t dropped_starts = 0;
  /// Median over start points of the largest Hessian eigenvalue magnitude.
  double curvature_scale = 0.0;
};

namespace detail {

inline double halton(std::size_t index, std::size_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

inline std::size_t nth_prime(std::size_t n) {
  std::size_t count = 0;
  for (std::size_t k = 2;; ++k) {
    bool prime = true;
    for (std::size_t p = 2; p * p <= k; ++p) {
      if (k % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime && count++ == n) return k;
  }
}

/// Newton step on grad Psi = 0 with a pseudo-inverse of the Hessian.
inline Vector newton_direction(const SymEigen& eig, const Vector& g) {
  double scale = 0.0;
  for (double v : eig.values) scale = std::max(scale, std::abs(v));
  Vector step(g.size(), 0.0);
  if (scale == 0.0) return step;
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    const double lambda = eig.values[k];
    if (std::abs(lambda) <= 1e-12 * scale) continue;
    const Vector v = eig.vectors.col(k);
    const double c = -dot(v, g) / lambda;
    axpy(c, v, step);
  }
  return step;
}

inline bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/// Scrambled low-discrepancy start points: a Halton sequence with a random
/// Cranley-Patterson rotation, mapped into the box.
inline std::vector<Vector> scrambled_starts(const Box& box, std::size_t count, SeededRng& rng) {
  const std::size_t d = box.dim();
  Vector shift(d);
  for (auto& s : shift) s = rng.uniform();
  std::vector<Vector> starts(count, Vector(d));
  for (std::size_t n = 0; n < count; ++n) {
    for (std::size_t i = 0; i < d; ++i) {
      double u = detail::halton(n + 1, detail::nth_prime(i)) + shift[i];
      u -= std::floor(u);
      starts[n][i] = box.lo[i] + u * (box.hi[i] - box.lo[i]);
    }
  }
  return starts;
}

/// Degenerate when min |eigenvalue| <= degen_tol * max(max |eigenvalue| at the
/// point, curvature scale of the field).
inline bool is_degenerate(const CriticalPoint& p, double degen_tol, double curvature_scale) {
  return p.min_abs_eigenvalue() <= degen_tol * std::max(p.max_abs_eigenvalue(), curvature_scale);
}

inline CriticalSearch find_critical_points(const ScalarField& field, const Box& domain, SeededRng& rng,
                                           const SearchOptions& opt = {}) {
  domain.validate();
  if (domain.dim() != field.dim) throw DimensionError("search box dimension differs from field dimension");
  if (opt.starts < 1) throw InputError("find_critical_points: starts must be >= 1");

  CriticalSearch out;
  std::vector<double> start_curvatures;
  std::vector<CriticalPoint> raw;

  for (const Vector& start : scrambled_starts(domain, opt.starts, rng)) {
    Vector x = start;
    bool alive = true;
    try {
      Vector g = field.grad(x);
      double gn = norm2(g);
      for (std::size_t it = 0; it < opt.max_iterations && alive; ++it) {
        const SymEigen eig = sym_eigen(field.hessian(x));
        if (it == 0) {
          double m = 0.0;
          for (double v : eig.values) m = std::max(m, std::abs(v));
          start_curvatures.push_back(m);
        }
        const Vector step = detail::newton_direction(eig, g);
        if (norm2(step) <= 1e-14 * (1.0 + norm2(x))) break;
        double alpha = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 30; ++halving, alpha *= 0.5) {
          Vector trial = x;
          axpy(alpha, step, trial);
          const Vector gt = field.grad(trial);
          const double gtn = norm2(gt);
          if (std::isfinite(gtn) && gtn < gn) {
            x = std::move(trial);
            g = gt;
            gn = gtn;
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
        if (!domain.contains(x, 1.0)) alive = false;
      }
      if (alive && gn <= opt.grad_tol && domain.contains(x)) {
        CriticalPoint p;
        p.location = x;
        p.gradient_norm = gn;
        p.hessian_eigenvalues = sym_eigen(field.hessian(x)).values;
        raw.push_back(std::move(p));
      } else {
        ++out.dropped_starts;
      }
    } catch (const Error&) {
      ++out.dropped_starts;
    }
  }

  if (!start_curvatures.empty()) {
    auto mid = start_curvatures.begin() + static_cast<std::ptrdiff_t>(start_curvatures.size() / 2);
    std::nth_element(start_curvatures.begin(), mid, start_curvatures.end());
    out.curvature_scale = *mid;
  }

  std::sort(raw.begin(), raw.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return detail::lex_less(a.location, b.location); });
  for (auto& p : raw) {
    bool merged = false;
    for (auto& q : out.points) {
      if (norm2(p.location - q.location) <= opt.merge_radius) {
        if (p.gradient_norm < q.gradient_norm) q = p;
        merged = true;
        break;
      }
    }
    if (!merged) out.points.push_back(std::move(p));
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return detail::lex_less(a.location, b.location); });
  for (auto& p : out.points) p.degenerate = is_degenerate(p, opt.degen_tol, out.curvature_scale);
  return out;
}

/// Minimum of ||grad Psi|| over a regular grid of at most `budget` nodes
/// (at least two nodes per axis, box corners included).
inline double grid_min_gradient(const ScalarField& field, const Box& domain, std::size_t budget) {
  const std::size_t d = domain.dim();
  std::size_t per_axis = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(d)))));
  while (per_axis > 2 && std::pow(static_cast<double>(per_axis), static_cast<double>(d)) > static_cast<double>(budget)) {
    --per_axis;
  }
  std::vector<std::size_t> idx(d, 0);
  Vector x(d);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = domain.lo[i] + (domain.hi[i] - domain.lo[i]) * static_cast<double>(idx[i]) /
                                static_cast<double>(per_axis - 1);
    }
    best = std::min(best, norm2(field.grad(x)));
    std::size_t k = 0;
    while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == d) break;
  }
  return best;
}

enum class Verdict { C1, C2, C3, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::C1: return "C1";
    case Verdict::C2: return "C2";
    case Verdict::C3: return "C3";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct FunctionClassReport {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<CriticalPoint> critical_points;
  Box search_domain;
  SearchOptions options;
  double grid_min_gradient = 0.0;
  std::size_t dropped_starts = 0;
  double curvature_scale = 0.0;
};

inline FunctionClassReport classify_function(const ScalarField& field, const Box& domain, SeededRng& rng,
                                             const SearchOptions& opt = {}) {
  FunctionClassReport rep;
  const CriticalSearch search = find_critical_points(field, domain, rng, opt);
  rep.critical_points = search.points;
  rep.search_domain = domain;
  rep.options = opt;
  rep.dropped_starts = search.dropped_starts;
  rep.curvature_scale = search.curvature_scale;
  rep.grid_min_gradient = grid_min_gradient(field, domain, opt.grid_budget);
  if (!rep.critical_points.empty()) {
    const bool any_degenerate = std::any_of(rep.critical_points.begin(), rep.critical_points.end(),
                                            [](const CriticalPoint& p) { return p.degenerate; });
    rep.verdict = any_degenerate ? Verdict::C3 : Verdict::C2;
  } else {
    rep.verdict = rep.grid_min_gradient > opt.grad_floor ? Verdict::C1 : Verdict::Inconclusive;
  }
  return rep;
}

/// One row per critical point, then a summary row (kind "summary") holding
/// the grid minimum of the gradient norm, the number of degenerate points and
/// the verdict.
inline io::CsvTable report_table(const FunctionClassReport& rep) {
  const std::size_t d = rep.search_domain.dim();
  std::vector<std::string> header{"kind"};
  for (std::size_t i = 0; i < d; ++i) header.push_back("x" + std::to_string(i + 1));
  for (const char* c : {"gradient_norm", "min_abs_eig", "degenerate", "verdict"}) header.push_back(c);
  io::CsvTable t(header);
  for (const auto& p : rep.critical_points) {
    std::vector<std::string> row{"point"};
    for (double v : p.location) row.push_back(io::format_real(v));
    row.push_back(io::format_real(p.gradient_norm));
    row.push_back(io::format_real(p.min_abs_eigenvalue()));
    row.push_back(p.degenerate ? "true" : "false");
    row.push_back("");
    t.add_row(std::move(row));
  }
  std::vector<std::string> summary{"summary"};
  for (std::size_t i = 0; i < d; ++i) summary.push_back("");
  summary.push_back(io::format_real(rep.grid_min_gradient));
  summary.push_back("");
  summary.push_back(std::to_string(std::count_if(rep.critical_points.begin(), rep.critical_points.end(),
                                                 [](const CriticalPoint& p) { return p.degenerate; })));
  summary.push_back(to_string(rep.verdict));
  t.add_row(std::move(summary));
  return t;
}

}  // namespace dynlab::morse
