#pragma once

// Small dense eigen/SVD/QR kernels. Everything here targets matrices of at
// most a few dozen rows.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include "dynlab/numerics/matrix.hpp"

namespace dynlab {

struct SymEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
};

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-10) {
  if (!m.square()) return false;
  const double scale = std::max(1.0, m.max_abs());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
  return true;
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
inline SymEigen sym_eigen(const Matrix& m) {
  if (!m.square()) throw DimensionError("sym_eigen needs a square matrix, got " + m.shape());
  if (!m.all_finite()) throw InputError("sym_eigen: non-finite entries");
  if (!is_symmetric(m)) throw InputError("sym_eigen: matrix is not symmetric");
  const std::size_t n = m.rows();
  Matrix a = m;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off == 0.0 || off <= 1e-34 * diag) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

/// Singular values (descending) by one-sided Jacobi; accurate for tiny values.
inline Vector singular_values(const Matrix& m) {
  // Work on the orientation with at least as many rows as columns.
  Matrix a = m.rows() >= m.cols() ? m : m.transpose();
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          alpha += a(r, p) * a(r, p);
          beta += a(r, q) * a(r, q);
          gamma += a(r, p) * a(r, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const double ap = a(r, p);
          const double aq = a(r, q);
          a(r, p) = c * ap - s * aq;
          a(r, q) = s * ap + c * aq;
        }
      }
    }
    if (!rotated) break;
  }
  Vector sv(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += a(r, c) * a(r, c);
    sv[c] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

/// Numerical rank: singular values above rel_tol * largest.
inline std::size_t numerical_rank(const Matrix& m, double rel_tol = 1e-10) {
  if (m.empty()) return 0;
  const Vector sv = singular_values(m);
  if (sv.front() == 0.0) return 0;
  return static_cast<std::size_t>(std::count_if(
      sv.begin(), sv.end(), [&](double s) { return s >= rel_tol * sv.front(); }));
}

/// 2-norm condition number; +inf for singular input.
inline double condition_number(const Matrix& m) {
  const Vector sv = singular_values(m);
  if (sv.empty()) return 1.0;
  if (sv.back() == 0.0) return std::numeric_limits<double>::infinity();
  return sv.front() / sv.back();
}

struct QR {
  Matrix q;  // orthonormal columns
  Matrix r;  // upper triangular with nonnegative diagonal
};

/// Householder QR of a square or tall matrix (thin factors).
inline QR qr_decompose(const Matrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  if (rows < cols) throw DimensionError("qr_decompose needs rows >= cols, got " + m.shape());
  Matrix r = m;
  Matrix q = Matrix::identity(rows);
  Vector v(rows);
  for (std::size_t k = 0; k < cols; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < rows; ++i) norm += r(i, k) * r(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = r(k, k) > 0 ? -norm : norm;
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = k; i < rows; ++i) v[i] = r(i, k);
    v[k] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < rows; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < rows; ++i) s += v[i] * r(i, j);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < rows; ++i) r(i, j) -= s * v[i];
    }
    for (std::size_t j = 0; j < rows; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < rows; ++i) s += v[i] * q(j, i);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < rows; ++i) q(j, i) -= s * v[i];
    }
  }
  QR out{Matrix(rows, cols), Matrix(cols, cols)};
  for (std::size_t k = 0; k < cols; ++k) {
    const double sign = r(k, k) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < rows; ++i) out.q(i, k) = sign * q(i, k);
    for (std::size_t j = k; j < cols; ++j) out.r(k, j) = sign * r(k, j);
  }
  return out;
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
inline Vector solve(const Matrix& a_in, std::span<const double> b_in) {
  if (!a_in.square() || a_in.rows() != b_in.size()) {
    throw DimensionError("solve: " + a_in.shape() + " with rhs " + std::to_string(b_in.size()));
  }
  const std::size_t n = a_in.rows();
  Matrix a = a_in;
  Vector b(b_in.begin(), b_in.end());
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw InputError("solve: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
    x[k] = s / a(k, k);
  }
  return x;
}

namespace detail {

// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
// iteration (after the classical EISPACK hqr routine).
inline std::vector<std::complex<double>> hessenberg_eigenvalues(Matrix h) {
  const int n = static_cast<int>(h.rows());
  std::vector<std::complex<double>> ev(static_cast<std::size_t>(n));
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(h(i, j));
  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l >= 1; --l) {
        const double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
        const double scale = s == 0.0 ? anorm : s;
        if (std::abs(h(l, l - 1)) <= std::numeric_limits<double>::epsilon() * scale) {
          h(l, l - 1) = 0.0;
          break;
        }
      }
      const double x = h(nn, nn);
      if (l == nn) {
        ev[nn] = {x + t, 0.0};
        --nn;
      } else {
        const double y = h(nn - 1, nn - 1);
        const double w = h(nn, nn - 1) * h(nn - 1, nn);
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          const double z = std::sqrt(std::abs(q));
          const double xs = x + t;
          if (q >= 0.0) {
            const double zz = p + std::copysign(z, p);
            ev[nn - 1] = ev[nn] = {xs + zz, 0.0};
            if (zz != 0.0) ev[nn] = {xs - w / zz, 0.0};
          } else {
            ev[nn - 1] = {xs + p, z};
            ev[nn] = {xs + p, -z};
          }
          nn -= 2;
        } else {
          if (its == 60) throw Error("hessenberg QR did not converge");
          double xx = x, yy = y, ww = w;
          if (its == 10 || its == 20) {
            t += xx;
            for (int i = 0; i <= nn; ++i) h(i, i) -= xx;
            const double s = std::abs(h(nn, nn - 1)) + std::abs(h(nn - 1, nn - 2));
            yy = xx = 0.75 * s;
            ww = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          double p = 0, q = 0, r = 0, z = 0;
          for (; m >= l; --m) {
            z = h(m, m);
            r = xx - z;
            const double s = yy - z;
            p = (r * s - ww) / h(m + 1, m) + h(m, m + 1);
            q = h(m + 1, m + 1) - z - r - s;
            r = h(m + 2, m + 1);
            const double sc = std::abs(p) + std::abs(q) + std::abs(r);
            p /= sc;
            q /= sc;
            r /= sc;
            if (m == l) break;
            const double u = std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) +
                                            std::abs(h(m + 1, m + 1)));
            if (u <= std::numeric_limits<double>::epsilon() * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            h(i + 2, i) = 0.0;
            if (i != m) h(i + 2, i - 1) = 0.0;
          }
          for (int k = m; k < nn; ++k) {
            if (k != m) {
              p = h(k, k - 1);
              q = h(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn) r = h(k + 2, k - 1);
              xx = std::abs(p) + std::abs(q) + std::abs(r);
              if (xx != 0.0) {
                p /= xx;
                q /= xx;
                r /= xx;
              }
            }
            const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) h(k, k - 1) = -h(k, k - 1);
            } else {
              h(k, k - 1) = -s * xx;
            }
            p += s;
            xx = p / s;
            yy = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = h(k, j) + q * h(k + 1, j);
              if (k + 1 != nn) {
                p += r * h(k + 2, j);
                h(k + 2, j) -= p * z;
              }
              h(k + 1, j) -= p * yy;
              h(k, j) -= p * xx;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
              p = xx * h(i, k) + yy * h(i, k + 1);
              if (k + 1 != nn) {
                p += z * h(i, k + 2);
                h(i, k + 2) -= p * r;
              }
              h(i, k + 1) -= p * q;
              h(i, k) -= p;
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  return ev;
}

inline Matrix to_hessenberg(Matrix a) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = a(k + 1, k) > 0 ? -norm : norm;
    Vector v(n, 0.0);
    for (std::size_t i = k + 1; i < n; ++i) v[i] = a(i, k);
    v[k + 1] -= alpha;
    double vv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vv += v[i] * v[i];
    if (vv == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
      s = 2.0 * s / vv;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      s = 2.0 * s / vv;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
    }
  }
  return a;
}

}  // namespace detail

/// All eigenvalues of a general square matrix (Hessenberg + shifted QR).
inline std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  if (!m.square()) throw DimensionError("eigenvalues needs a square matrix, got " + m.shape());
  if (m.rows() == 0) return {};
  return detail::hessenberg_eigenvalues(detail::to_hessenberg(m));
}

/// max |eigenvalue|. Power iteration first; QR algorithm when it stalls.
inline double spectral_radius(const Matrix& m) {
  if (!m.square()) throw DimensionError("spectral_radius needs a square matrix, got " + m.shape());
  if (!m.all_finite()) throw InputError("spectral_radius: non-finite entries");
  const std::size_t n = m.rows();
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(m(0, 0));
  if (is_symmetric(m, 1e-14)) {
    const SymEigen e = sym_eigen(m);
    return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
  }

  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i);
  double prev = -1.0;
  bool converged = false;
  double estimate = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector w = m * v;
    const double nw = norm2(w);
    if (nw == 0.0) break;
    const double nv = norm2(v);
    estimate = nw / nv;
    for (double& x : w) x /= nw;
    // Converged when the Rayleigh-style growth ratio and direction settle.
    Vector w2 = m * w;
    const double growth = norm2(w2);
    double align = std::abs(dot(w2, w)) / std::max(growth, 1e-300);
    if (prev >= 0.0 && std::abs(growth - prev) <= 1e-13 * std::max(1.0, growth) &&
        std::abs(align - 1.0) <= 1e-12) {
      estimate = growth;
      converged = true;
      break;
    }
    prev = growth;
    v = std::move(w);
  }
  if (converged) return estimate;
  if (n > 64) throw UnsupportedError("spectral_radius: power iteration stalled on a matrix larger than 64x64");
  double rho = 0.0;
  for (const auto& z : eigenvalues(m)) rho = std::max(rho, std::abs(z));
  return rho;
}

}  // namespace dynlab
