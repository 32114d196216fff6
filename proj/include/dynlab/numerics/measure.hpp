#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dynlab/numerics/matrix.hpp"

namespace dynlab {

/// Weighted atomic measure. Positions are vectors; most routines here only
/// accept dimension 1.
struct MeasureAtoms {
  std::vector<Vector> positions;
  Vector weights;

  std::size_t size() const noexcept { return weights.size(); }
  std::size_t dimension() const { return positions.empty() ? 0 : positions.front().size(); }
  double total_mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

  /// Atoms on the line or circle from scalar positions.
  static MeasureAtoms from_scalars(std::span<const double> xs, std::span<const double> ws) {
    if (xs.size() != ws.size()) throw DimensionError("positions and weights differ in length");
    MeasureAtoms m;
    m.positions.reserve(xs.size());
    for (double x : xs) m.positions.push_back(Vector{x});
    m.weights.assign(ws.begin(), ws.end());
    return m;
  }

  void validate() const {
    if (positions.size() != weights.size()) {
      throw DimensionError("MeasureAtoms: " + std::to_string(positions.size()) + " positions vs " +
                           std::to_string(weights.size()) + " weights");
    }
    for (double w : weights)
      if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("MeasureAtoms: negative or non-finite weight");
    if (!(total_mass() > 0.0)) throw InputError("MeasureAtoms: total mass must be positive");
  }
};

struct Geometry {
  enum class Kind { Line, Circle };
  Kind kind = Kind::Line;
  double period = 0.0;

  static Geometry line() { return {Kind::Line, 0.0}; }
  static Geometry circle(double period = 2.0 * 3.14159265358979323846) {
    return {Kind::Circle, period};
  }
};

namespace detail {

inline std::vector<std::pair<double, double>> signed_atoms(const MeasureAtoms& a,
                                                           const MeasureAtoms& b,
                                                           const Geometry& g) {
  std::vector<std::pair<double, double>> out;
  out.reserve(a.size() + b.size());
  auto place = [&](double x) {
    if (g.kind == Geometry::Kind::Circle) {
      x = std::fmod(x, g.period);
      if (x < 0) x += g.period;
      if (x >= g.period) x = 0.0;
    }
    return x;
  };
  for (std::size_t i = 0; i < a.size(); ++i) out.emplace_back(place(a.positions[i][0]), a.weights[i]);
  for (std::size_t i = 0; i < b.size(); ++i) out.emplace_back(place(b.positions[i][0]), -b.weights[i]);
  std::sort(out.begin(), out.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  return out;
}

inline void check_probability(const MeasureAtoms& m, const char* name) {
  m.validate();
  if (m.dimension() != 1) {
    throw UnsupportedError(std::string("wasserstein1: ") + name +
                           " has dimension " + std::to_string(m.dimension()) +
                           "; only one-dimensional measures are supported");
  }
  if (std::abs(m.total_mass() - 1.0) > 1e-9) {
    throw InputError(std::string("wasserstein1: ") + name + " is not normalized (mass " +
                     std::to_string(m.total_mass()) + ")");
  }
}

}  // namespace detail

/// Wasserstein-1 distance between two 1-D probability measures on the line or
/// on a circle of the given period.
///
/// Line: integral of |F_a - F_b| over the merged atom positions.
/// Circle: min over s of the integral of |F_a - F_b - s| over one period; the
/// objective is piecewise linear in s, minimized at a length-weighted median
/// of the CDF difference.
inline double wasserstein1(const MeasureAtoms& a, const MeasureAtoms& b,
                           const Geometry& geometry = Geometry::line()) {
  detail::check_probability(a, "first measure");
  detail::check_probability(b, "second measure");
  const auto atoms = detail::signed_atoms(a, b, geometry);

  // Piecewise-constant CDF difference: segment lengths and values.
  std::vector<std::pair<double, double>> segments;  // (value, length)
  segments.reserve(atoms.size() + 1);
  double cdf = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    cdf += atoms[k].second;
    const double right = k + 1 < atoms.size() ? atoms[k + 1].first
                         : geometry.kind == Geometry::Kind::Circle ? geometry.period
                                                                   : atoms[k].first;
    const double len = right - atoms[k].first;
    if (len > 0.0) segments.emplace_back(cdf, len);
  }

  if (geometry.kind == Geometry::Kind::Line) {
    double total = 0.0;
    for (const auto& [v, len] : segments) total += std::abs(v) * len;
    return total;
  }

  if (!(geometry.period > 0.0)) throw InputError("wasserstein1: circle period must be positive");
  // Segment [0, first atom) carries the CDF difference 0.
  if (!atoms.empty() && atoms.front().first > 0.0) segments.emplace_back(0.0, atoms.front().first);
  std::sort(segments.begin(), segments.end());
  double half = 0.0;
  for (const auto& s : segments) half += s.second;
  half *= 0.5;
  double acc = 0.0;
  double shift = segments.empty() ? 0.0 : segments.back().first;
  for (const auto& [v, len] : segments) {
    acc += len;
    if (acc >= half) {
      shift = v;
      break;
    }
  }
  double total = 0.0;
  for (const auto& [v, len] : segments) total += std::abs(v - shift) * len;
  return total;
}

/// KL(p || q) with 0 ln 0 = 0; +infinity when p puts mass where q does not.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: lengths " + std::to_string(p.size()) + " and " +
                         std::to_string(q.size()));
  }
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw InputError("kl_divergence: negative probability");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
    throw InputError("kl_divergence: inputs must each sum to 1");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

}  // namespace dynlab
