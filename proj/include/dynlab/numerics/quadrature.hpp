#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dynlab/errors.hpp"
#include "dynlab/numerics/linalg.hpp"

namespace dynlab {

struct QuadratureRule {
  Vector nodes;
  Vector weights;
};

namespace detail {

/// Golub–Welsch: nodes are eigenvalues of the symmetric Jacobi matrix, weights
/// are mu0 times the squared first components of the eigenvectors.
inline QuadratureRule golub_welsch(const Vector& off_diagonal, std::size_t n, double mu0) {
  Matrix J(n, n);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    J(k, k + 1) = off_diagonal[k];
    J(k + 1, k) = off_diagonal[k];
  }
  const SymEigen eig = sym_eigen(J);
  QuadratureRule rule;
  rule.nodes = eig.values;
  rule.weights.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = eig.vectors(0, k);
    rule.weights[k] = mu0 * v * v;
  }
  return rule;
}

}  // namespace detail

/// Gauss–Legendre rule on [0, 1]; weights sum to 1.
inline QuadratureRule gauss_legendre_unit(std::size_t order) {
  if (order == 0) throw InputError("gauss_legendre_unit: order must be >= 1");
  Vector beta(order > 0 ? order - 1 : 0);
  for (std::size_t k = 1; k < order; ++k) {
    const double kk = static_cast<double>(k);
    beta[k - 1] = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  QuadratureRule rule = detail::golub_welsch(beta, order, 2.0);
  for (std::size_t k = 0; k < order; ++k) {
    rule.nodes[k] = 0.5 * (rule.nodes[k] + 1.0);
    rule.weights[k] *= 0.5;
  }
  return rule;
}

/// Gauss–Hermite rule for the normal law N(mean, sd^2): nodes and
/// probabilities summing to 1, exact for polynomials of degree < 2 * order.
inline QuadratureRule gauss_hermite_normal(std::size_t order, double mean = 0.0, double sd = 1.0) {
  if (order == 0) throw InputError("gauss_hermite_normal: order must be >= 1");
  if (!(sd >= 0.0)) throw InputError("gauss_hermite_normal: sd must be nonnegative");
  Vector beta(order - 1);
  for (std::size_t k = 1; k < order; ++k) beta[k - 1] = std::sqrt(static_cast<double>(k));
  QuadratureRule rule = detail::golub_welsch(beta, order, 1.0);
  for (double& x : rule.nodes) x = mean + sd * x;
  return rule;
}

}  // namespace dynlab
