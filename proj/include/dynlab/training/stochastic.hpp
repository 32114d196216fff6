#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dynlab/io/csv.hpp"
#include "dynlab/training/stability.hpp"

namespace dynlab::training {

// ---------------------------------------------------------------- Milnor --

enum class ProbeMode { IsolatedMinimum, Manifold };

struct MilnorOptions {
  double radius = 0.1;
  std::size_t samples = 500;
  double eta = 0.1;
  std::size_t horizon = 200;
  double tol = 1e-6;
  std::optional<std::size_t> batch_size;
  ProbeMode mode = ProbeMode::IsolatedMinimum;
  /// Manifold mode: endpoints must also lie within this distance of theta*.
  double neighborhood = 1.0;
};

struct MilnorResult {
  std::vector<bool> converged;
  double fraction() const {
    std::size_t n = 0;
    for (bool c : converged) n += c ? 1 : 0;
    return converged.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(converged.size());
  }
  io::CsvTable table() const {
    io::CsvTable t({"sample", "converged"});
    for (std::size_t i = 0; i < converged.size(); ++i) t.add({i, converged[i] ? 1 : 0});
    return t;
  }
};

/// Uniform point in the Euclidean ball of the given radius around `center`.
inline Vector sample_ball(const Vector& center, double radius, SeededRng& rng) {
  Vector dir(center.size());
  double n = 0.0;
  while (n == 0.0) {
    for (double& v : dir) v = rng.normal();
    n = norm2(dir);
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(center.size()));
  Vector p = center;
  axpy(r / n, dir, p);
  return p;
}

/// Monte Carlo proxy for a basin of positive measure: the fraction of
/// (S)GD runs started uniformly in a ball around theta* that end near
/// theta* (or near the manifold, in manifold mode). Sample i draws its start
/// and its batches from rng.split(i).
inline MilnorResult milnor_probe(const LossModel& model, const Vector& theta_star, const MilnorOptions& opt,
                                 const SeededRng& rng) {
  if (opt.samples < 1) throw InputError("milnor_probe: samples must be >= 1");
  if (!(opt.radius > 0.0)) throw InputError("milnor_probe: radius must be positive");
  GDConfig cfg;
  cfg.eta = opt.eta;
  cfg.max_steps = opt.horizon;
  cfg.stride = opt.horizon;
  cfg.batch_size = opt.batch_size;
  MilnorResult out;
  for (std::size_t i = 0; i < opt.samples; ++i) {
    SeededRng stream = rng.split(i);
    const Vector start = sample_ball(theta_star, opt.radius, stream);
    const Trajectory tr = opt.batch_size ? sgd_run(model, start, cfg, stream) : gd_run(model, start, cfg);
    bool ok = false;
    if (!tr.diverged) {
      const Vector& end = tr.last().theta;
      if (opt.mode == ProbeMode::IsolatedMinimum) {
        ok = norm2(end - theta_star) <= opt.tol;
      } else {
        ok = model.residual(end) <= opt.tol && norm2(end - theta_star) <= opt.neighborhood;
      }
    }
    out.converged.push_back(ok);
  }
  return out;
}

// ------------------------------------------------------ batch Jacobians --

struct BatchJacobians {
  std::vector<std::vector<std::size_t>> batches;
  std::vector<Matrix> matrices;
  /// All C(N, B) batches were listed (otherwise a uniform sample).
  bool enumerated = true;
};

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

/// A_Xi = I - eta * N^T Hess L_Xi(theta*) N in the normal basis N.
inline BatchJacobians batch_normal_jacobians(const LossModel& model, const Vector& theta_star, double eta,
                                             std::size_t B, SeededRng& rng, std::size_t max_enumerate = 10000) {
  const std::size_t N = model.sample_count();
  if (B < 1 || B > N) throw InputError("batch_normal_jacobians: need 1 <= B <= N");
  const ManifoldSplit split = tangent_normal_split(model, theta_star);
  const Matrix& basis = split.normal;
  const std::size_t r = basis.cols();

  BatchJacobians out;
  if (binomial(N, B) <= static_cast<double>(max_enumerate)) {
    std::vector<std::size_t> idx(B);
    for (std::size_t i = 0; i < B; ++i) idx[i] = i;
    while (true) {
      out.batches.push_back(idx);
      std::size_t k = B;
      while (k > 0 && idx[k - 1] == N - B + k - 1) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t j = k; j < B; ++j) idx[j] = idx[j - 1] + 1;
    }
  } else {
    out.enumerated = false;
    for (std::size_t s = 0; s < max_enumerate; ++s) out.batches.push_back(rng.subset(N, B));
  }
  for (const auto& batch : out.batches) {
    const Matrix H = hessian(model, theta_star, batch);
    Matrix A = basis.transpose() * (H * basis);
    A *= -eta;
    for (std::size_t i = 0; i < r; ++i) A(i, i) += 1.0;
    out.matrices.push_back(std::move(A));
  }
  return out;
}

// ------------------------------------------------------------ Lyapunov --

struct LyapunovOptions {
  std::size_t n_steps = 100000;
  std::size_t replicates = 20;
  /// Each replicate first applies a random number of products in
  /// [burn_in, 2 burn_in) without recording them.
  std::size_t burn_in = 1000;
  std::size_t checkpoints = 20;
};

struct LyapunovRow {
  std::size_t n = 0;
  double lambda_estimate = 0.0;
  double stderr_ = 0.0;
};

struct LyapunovEstimate {
  double lambda = 0.0;
  double standard_error = 0.0;
  /// Mean of every exponent from the full-frame QR, largest first.
  Vector spectrum;
  Vector replicate_values;
  std::vector<LyapunovRow> trace;
  /// A zero product was met; the exponent is -infinity.
  bool minus_infinity = false;

  io::CsvTable table() const {
    io::CsvTable t({"n", "lambda_estimate", "stderr"});
    for (const auto& r : trace) t.add({r.n, r.lambda_estimate, r.stderr_});
    return t;
  }
};

using MatrixSampler = std::function<const Matrix&(SeededRng&)>;

namespace detail {

/// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

/// Q <- A Q followed by modified Gram-Schmidt; returns diag(R) magnitudes.
inline void advance_frame(const Matrix& A, Matrix& Q, Matrix& work, Vector& rdiag) {
  const std::size_t k = Q.rows();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += A(i, l) * Q(l, j);
      work(i, j) = s;
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += work(i, p) * work(i, j);
      for (std::size_t i = 0; i < k; ++i) work(i, j) -= s * work(i, p);
    }
    double n = 0.0;
    for (std::size_t i = 0; i < k; ++i) n += work(i, j) * work(i, j);
    n = std::sqrt(n);
    rdiag[j] = n;
    if (n > 0.0) {
      for (std::size_t i = 0; i < k; ++i) work(i, j) /= n;
    }
  }
  std::swap(Q, work);
}

}  // namespace detail

/// Furstenberg-Kesten exponent of a random matrix product, estimated by
/// full-frame QR renormalization. Replicate r uses rng.split(r) for its start
/// frame, burn-in length and matrix draws.
inline LyapunovEstimate lyapunov_exponent(const MatrixSampler& sampler, std::size_t dim, const LyapunovOptions& opt,
                                          const SeededRng& rng) {
  if (opt.n_steps < 1) throw InputError("lyapunov_exponent: n_steps must be >= 1");
  if (opt.replicates < 1) throw InputError("lyapunov_exponent: replicates must be >= 1");
  if (dim < 1) throw InputError("lyapunov_exponent: matrix size must be >= 1");
  const std::size_t R = opt.replicates;
  const std::size_t cps = std::max<std::size_t>(1, std::min(opt.checkpoints, opt.n_steps));
  std::vector<std::size_t> cp_steps;
  for (std::size_t c = 1; c <= cps; ++c) cp_steps.push_back(opt.n_steps * c / cps);

  LyapunovEstimate out;
  out.spectrum.assign(dim, 0.0);
  std::vector<Vector> partial(cps, Vector(R, 0.0));
  Vector rdiag(dim);
  for (std::size_t rep = 0; rep < R && !out.minus_infinity; ++rep) {
    SeededRng stream = rng.split(rep);
    Matrix start(dim, dim);
    for (double& v : start.data()) v = stream.normal();
    Matrix Q = qr_decompose(start).q;
    Matrix work(dim, dim);
    const std::size_t burn = opt.burn_in == 0 ? 0 : opt.burn_in + stream.uniform_index(opt.burn_in);
    for (std::size_t b = 0; b < burn; ++b) {
      const Matrix& A = sampler(stream);
      if (A.rows() != dim || A.cols() != dim) throw DimensionError("lyapunov_exponent: matrix size changed");
      detail::advance_frame(A, Q, work, rdiag);
      if (rdiag[0] == 0.0) {
        out.minus_infinity = true;
        break;
      }
    }
    std::vector<detail::CompensatedSum> sums(dim);
    std::size_t next_cp = 0;
    for (std::size_t n = 1; n <= opt.n_steps && !out.minus_infinity; ++n) {
      const Matrix& A = sampler(stream);
      if (A.rows() != dim || A.cols() != dim) throw DimensionError("lyapunov_exponent: matrix size changed");
      detail::advance_frame(A, Q, work, rdiag);
      if (rdiag[0] == 0.0) {
        out.minus_infinity = true;
        break;
      }
      for (std::size_t j = 0; j < dim; ++j) sums[j].add(std::log(rdiag[j]));
      if (n == cp_steps[next_cp]) {
        partial[next_cp][rep] = sums[0].value() / static_cast<double>(n);
        ++next_cp;
      }
    }
    if (out.minus_infinity) break;
    out.replicate_values.push_back(sums[0].value() / static_cast<double>(opt.n_steps));
    for (std::size_t j = 0; j < dim; ++j) out.spectrum[j] += sums[j].value() / static_cast<double>(opt.n_steps * R);
  }
  if (out.minus_infinity) {
    out.lambda = -std::numeric_limits<double>::infinity();
    out.standard_error = 0.0;
    out.spectrum.assign(dim, -std::numeric_limits<double>::infinity());
    return out;
  }
  auto mean_se = [R](const Vector& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(R);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double se = R > 1 ? std::sqrt(ss / static_cast<double>(R - 1) / static_cast<double>(R)) : 0.0;
    return std::pair{m, se};
  };
  std::tie(out.lambda, out.standard_error) = mean_se(out.replicate_values);
  for (std::size_t c = 0; c < cps; ++c) {
    const auto [m, se] = mean_se(partial[c]);
    out.trace.push_back({cp_steps[c], m, se});
  }
  return out;
}

/// Finite family of matrices drawn with the given probabilities.
inline LyapunovEstimate lyapunov_exponent(const std::vector<Matrix>& matrices, const Vector& probabilities,
                                          const LyapunovOptions& opt, const SeededRng& rng) {
  if (matrices.empty()) throw InputError("lyapunov_exponent: no matrices");
  if (probabilities.size() != matrices.size()) throw DimensionError("one probability per matrix required");
  const std::size_t dim = matrices.front().rows();
  double total = 0.0;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    if (!matrices[i].square() || matrices[i].rows() != dim) {
      throw DimensionError("lyapunov_exponent: matrices must be square of equal size");
    }
    if (!(probabilities[i] >= 0.0)) throw InputError("probabilities must be nonnegative");
    total += probabilities[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("probabilities must sum to 1");
  Vector cumulative(matrices.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < matrices.size(); ++i) cumulative[i] = acc += probabilities[i];
  MatrixSampler sampler = [&](SeededRng& s) -> const Matrix& {
    if (matrices.size() == 1) return matrices[0];
    const double u = s.uniform() * acc;
    for (std::size_t i = 0; i + 1 < matrices.size(); ++i)
      if (u < cumulative[i]) return matrices[i];
    return matrices.back();
  };
  return lyapunov_exponent(sampler, dim, opt, rng);
}

// ---------------------------------------------------------- regularity --

struct RegularityReport {
  std::vector<bool> invertible;
  std::vector<bool> complement_invertible;
  /// Heuristic: no common invariant line among semigroup words of length <= 3.
  bool irreducible_indicative = true;
  std::string irreducibility_label = "indicative";

  bool all_invertible() const {
    for (bool b : invertible)
      if (!b) return false;
    for (bool b : complement_invertible)
      if (!b) return false;
    return true;
  }
  bool regular() const { return all_invertible() && irreducible_indicative; }
};

namespace detail {

inline bool is_scalar_multiple_of_identity(const Matrix& m) {
  const double scale = std::max(m.max_abs(), 1e-300);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double target = i == j ? m(0, 0) : 0.0;
      if (std::abs(m(i, j) - target) > 1e-12 * scale) return false;
    }
  return true;
}

/// Unit real eigenvectors by shifted inverse iteration, one per real eigenvalue.
inline std::vector<Vector> real_eigenvectors(const Matrix& m) {
  std::vector<Vector> out;
  const double scale = std::max(m.max_abs(), 1e-300);
  for (const auto& ev : eigenvalues(m)) {
    if (std::abs(ev.imag()) > 1e-10 * scale) continue;
    Vector v(m.rows());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i);
    for (double shift = 1e-10; shift < 1e-2; shift *= 100.0) {
      try {
        Matrix s = m;
        for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) -= ev.real() + shift * scale;
        for (int it = 0; it < 3; ++it) {
          v = solve(s, v);
          const double n = norm2(v);
          for (double& x : v) x /= n;
        }
        break;
      } catch (const InputError&) {
      }
    }
    out.push_back(v);
  }
  return out;
}

inline bool is_eigenvector(const Matrix& m, const Vector& v) {
  const Vector mv = m * v;
  const double rq = dot(v, mv);
  Vector r = mv;
  axpy(-rq, v, r);
  return norm2(r) <= 1e-8 * std::max(m.max_abs(), 1e-300);
}

}  // namespace detail

/// Invertibility of A and I - A (condition number < 1e12) for every batch
/// matrix, plus the labeled irreducibility heuristic.
inline RegularityReport regularity_check(const std::vector<Matrix>& mats) {
  RegularityReport rep;
  if (mats.empty()) return rep;
  const std::size_t k = mats.front().rows();
  for (const auto& A : mats) {
    if (!A.square() || A.rows() != k) throw DimensionError("regularity_check: matrices must be square of equal size");
    rep.invertible.push_back(condition_number(A) < 1e12);
    Matrix c = Matrix::identity(k);
    c -= A;
    rep.complement_invertible.push_back(condition_number(c) < 1e12);
  }
  if (k <= 1) return rep;

  std::vector<Matrix> words = mats;
  const std::size_t base = mats.size();
  for (std::size_t len = 2; len <= 3; ++len) {
    const std::size_t start = words.size();
    const std::size_t prev_begin = len == 2 ? 0 : base;
    const std::size_t prev_end = len == 2 ? base : start;
    for (std::size_t w = prev_begin; w < prev_end && words.size() < 400; ++w)
      for (std::size_t g = 0; g < base && words.size() < 400; ++g) words.push_back(mats[g] * words[w]);
  }
  const Matrix* pivot = nullptr;
  for (const auto& w : words) {
    if (!detail::is_scalar_multiple_of_identity(w)) {
      pivot = &w;
      break;
    }
  }
  if (!pivot) {
    rep.irreducible_indicative = false;
    return rep;
  }
  for (const Vector& v : detail::real_eigenvectors(*pivot)) {
    bool common = true;
    for (const auto& w : words) {
      if (!detail::is_eigenvector(w, v)) {
        common = false;
        break;
      }
    }
    if (common) {
      rep.irreducible_indicative = false;
      break;
    }
  }
  return rep;
}

}  // namespace dynlab::training
