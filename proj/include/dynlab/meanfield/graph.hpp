#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dynlab/errors.hpp"
#include "dynlab/numerics/matrix.hpp"
#include "dynlab/numerics/quadrature.hpp"

namespace dynlab::meanfield {

/// Symmetric or asymmetric kernel on [0,1]^2.
struct Graphon {
  std::string id;
  std::function<double(double, double)> kernel;

  double operator()(double x, double y) const { return kernel(x, y); }
};

inline Graphon constant_graphon(double c) {
  return {"constant", [c](double, double) { return c; }};
}

/// Ranked-attachment kernel G(x, y) = x * y.
inline Graphon ranked_graphon() {
  return {"ranked", [](double x, double y) { return x * y; }};
}

/// Two-block stochastic block kernel split at `cut`.
inline Graphon block_graphon(double p_in, double p_out, double cut = 0.5) {
  return {"block", [=](double x, double y) { return (x < cut) == (y < cut) ? p_in : p_out; }};
}

/// Averages of G over the cells I_i x I_j with I_i = (i/M, (i+1)/M], by tensor
/// Gauss–Legendre quadrature of the given order.
inline Matrix graphon_cell_averages(const Graphon& g, std::size_t M, std::size_t order = 4) {
  if (M == 0) throw InputError("graphon_cell_averages: M must be >= 1");
  const QuadratureRule q = gauss_legendre_unit(order);
  const double h = 1.0 / static_cast<double>(M);
  Matrix out(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < order; ++a) {
        const double x = (static_cast<double>(i) + q.nodes[a]) * h;
        for (std::size_t b = 0; b < order; ++b) {
          const double y = (static_cast<double>(j) + q.nodes[b]) * h;
          acc += q.weights[a] * q.weights[b] * g(x, y);
        }
      }
      if (!std::isfinite(acc)) throw InputError("graphon '" + g.id + "' is not finite on cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
      out(i, j) = acc;
    }
  }
  return out;
}

/// Interaction weights either as a dense matrix or as one uniform value.
struct CouplingWeights {
  std::optional<Matrix> matrix;
  double uniform = 0.0;

  double operator()(std::size_t i, std::size_t j) const { return matrix ? (*matrix)(i, j) : uniform; }
  bool is_uniform() const { return !matrix.has_value(); }
};

struct ExplicitMatrix {
  Matrix a;
};
struct AllToAll {
  double K = 1.0;
};
struct GraphonCells {
  Graphon graphon;
  std::size_t order = 4;
};

/// Source of the coupling weights a_ij for a population of size M.
///
/// deterministic_weights gives the a_ij entering x_i' = f_i + sum_j a_ij g:
/// an explicit matrix as given, K/M for all-to-all, cell averages / M for a
/// graphon. raw_weights gives the entries that the stochastic system divides
/// by M: the explicit matrix, K, or the cell averages.
struct GraphSpec {
  std::variant<ExplicitMatrix, AllToAll, GraphonCells> source;

  static GraphSpec explicit_matrix(Matrix a) { return {ExplicitMatrix{std::move(a)}}; }
  static GraphSpec all_to_all(double K) { return {AllToAll{K}}; }
  static GraphSpec graphon(Graphon g, std::size_t order = 4) { return {GraphonCells{std::move(g), order}}; }

  std::string kind() const {
    switch (source.index()) {
      case 0: return "explicit";
      case 1: return "all_to_all";
      default: return "graphon";
    }
  }

  CouplingWeights raw_weights(std::size_t M) const {
    if (M == 0) throw InputError("GraphSpec: M must be >= 1");
    CouplingWeights w;
    if (const auto* e = std::get_if<ExplicitMatrix>(&source)) {
      if (e->a.rows() != M || e->a.cols() != M) {
        throw DimensionError("GraphSpec: explicit matrix is " + std::to_string(e->a.rows()) + "x" +
                             std::to_string(e->a.cols()) + " but M=" + std::to_string(M));
      }
      if (!all_finite(e->a.data())) throw InputError("GraphSpec: explicit matrix has non-finite entries");
      w.matrix = e->a;
    } else if (const auto* k = std::get_if<AllToAll>(&source)) {
      if (!std::isfinite(k->K)) throw InputError("GraphSpec: K must be finite");
      w.uniform = k->K;
    } else {
      const auto& g = std::get<GraphonCells>(source);
      w.matrix = graphon_cell_averages(g.graphon, M, g.order);
    }
    return w;
  }

  CouplingWeights deterministic_weights(std::size_t M) const {
    if (std::holds_alternative<ExplicitMatrix>(source)) return raw_weights(M);
    return scaled_by_population(raw_weights(M), M);
  }

  static CouplingWeights scaled_by_population(CouplingWeights w, std::size_t M) {
    const double m = static_cast<double>(M);
    if (w.matrix) {
      for (double& v : w.matrix->data()) v /= m;
    } else {
      w.uniform /= m;
    }
    return w;
  }
};

/// Fibers eta^u: for u in the i-th cell, atoms at j/M (j = 1..M) with
/// weights a_ij / M.
struct DigraphMeasure {
  std::size_t M = 0;
  Matrix weights;  // row i holds the fiber of cell i; entry j sits at (j+1)/M

  std::size_t cell_of(double u) const {
    const double c = std::ceil(u * static_cast<double>(M)) - 1.0;
    return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(M - 1)));
  }
  double atom_position(std::size_t j) const { return static_cast<double>(j + 1) / static_cast<double>(M); }
  double fiber_mass(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < M; ++j) s += weights(i, j);
    return s;
  }
};

inline DigraphMeasure digraph_measure_of(const GraphSpec& graph, std::size_t M) {
  const CouplingWeights raw = graph.raw_weights(M);
  DigraphMeasure out;
  out.M = M;
  out.weights = Matrix(M, M);
  const double m = static_cast<double>(M);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) {
      const double w = raw(i, j) / m;
      if (w < 0.0) throw InputError("digraph_measure_of: negative weight at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      out.weights(i, j) = w;
    }
  }
  return out;
}

namespace detail {

/// Concave piecewise-linear function on [-1, 1], stored as breakpoints.
struct ConcavePL {
  std::vector<std::pair<double, double>> pts;

  double eval(double x) const {
    if (x <= pts.front().first) return pts.front().second;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      if (x <= pts[k].first) {
        const auto [x0, y0] = pts[k - 1];
        const auto [x1, y1] = pts[k];
        return x1 == x0 ? std::max(y0, y1) : y0 + (y1 - y0) * (x - x0) / (x1 - x0);
      }
    }
    return pts.back().second;
  }
};

/// max over phi with |phi_k| <= 1 and |phi_{k+1} - phi_k| <= gap_k of
/// sum c_k phi_k, by dynamic programming on concave piecewise-linear value
/// functions.
inline double max_bounded_lipschitz(const std::vector<double>& c, const std::vector<double>& gaps) {
  if (c.empty()) return 0.0;
  ConcavePL v{{{-1.0, -c[0]}, {1.0, c[0]}}};
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double h = gaps[k - 1];
    std::size_t top = 0;
    for (std::size_t p = 1; p < v.pts.size(); ++p)
      if (v.pts[p].second > v.pts[top].second) top = p;
    // Box sup-convolution: the rising part moves left by h, the falling part
    // right by h, with a plateau at the maximum in between.
    std::vector<std::pair<double, double>> moved;
    for (std::size_t p = 0; p <= top; ++p) moved.emplace_back(v.pts[p].first - h, v.pts[p].second);
    for (std::size_t p = top; p < v.pts.size(); ++p) moved.emplace_back(v.pts[p].first + h, v.pts[p].second);
    ConcavePL shifted{std::move(moved)};
    std::vector<std::pair<double, double>> clipped;
    clipped.emplace_back(-1.0, shifted.eval(-1.0));
    for (const auto& p : shifted.pts)
      if (p.first > -1.0 && p.first < 1.0) clipped.push_back(p);
    clipped.emplace_back(1.0, shifted.eval(1.0));
    for (auto& p : clipped) p.second += c[k] * p.first;
    v.pts = std::move(clipped);
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : v.pts) best = std::max(best, p.second);
  return best;
}

}  // namespace detail

/// Bounded-Lipschitz distance sup { integral of phi d(a - b) : |phi| <= 1,
/// Lip(phi) <= 1 } between two atomic measures on the line. Exact for atomic
/// measures: the optimal phi is piecewise linear between atoms.
inline double bounded_lipschitz_distance(const std::vector<std::pair<double, double>>& a,
                                         const std::vector<std::pair<double, double>>& b) {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(a.size() + b.size());
  for (const auto& [x, w] : a) atoms.emplace_back(x, w);
  for (const auto& [x, w] : b) atoms.emplace_back(x, -w);
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> c, gaps;
  for (const auto& atom : atoms) c.push_back(atom.second);
  for (std::size_t k = 1; k < atoms.size(); ++k) gaps.push_back(atoms[k].first - atoms[k - 1].first);
  return detail::max_bounded_lipschitz(c, gaps);
}

struct DgmDistance {
  double distance = 0.0;
  double argmax_u = 0.0;
  std::size_t grid_u = 0;
};

/// Max over the u-grid (k + 1/2) / grid_u of the bounded-Lipschitz distance
/// between the fibers of `a` and `b`. Fibers are compared exactly; the only
/// approximation is the finite u-grid.
inline DgmDistance dgm_distance(const DigraphMeasure& a, const DigraphMeasure& b, std::size_t grid_u = 256) {
  if (grid_u == 0) throw InputError("dgm_distance: grid_u must be >= 1");
  if (a.M == 0 || b.M == 0) throw InputError("dgm_distance: empty digraph measure");
  DgmDistance out;
  out.grid_u = grid_u;
  auto fiber = [](const DigraphMeasure& m, std::size_t i) {
    std::vector<std::pair<double, double>> f;
    for (std::size_t j = 0; j < m.M; ++j)
      if (m.weights(i, j) != 0.0) f.emplace_back(m.atom_position(j), m.weights(i, j));
    return f;
  };
  for (std::size_t k = 0; k < grid_u; ++k) {
    const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(grid_u);
    const double d = bounded_lipschitz_distance(fiber(a, a.cell_of(u)), fiber(b, b.cell_of(u)));
    if (d > out.distance) {
      out.distance = d;
      out.argmax_u = u;
    }
  }
  return out;
}

}  // namespace dynlab::meanfield
