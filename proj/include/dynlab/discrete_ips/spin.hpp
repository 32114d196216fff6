#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dynlab/errors.hpp"
#include "dynlab/io/csv.hpp"
#include "dynlab/numerics/matrix.hpp"
#include "dynlab/numerics/measure.hpp"
#include "dynlab/numerics/rng.hpp"

namespace dynlab::discrete_ips {

inline constexpr std::size_t kEnumerationCap = 20;

using BinaryState = std::vector<int>;

struct SpinNetwork {
  Matrix A;
  Vector b;

  std::size_t size() const { return b.size(); }

  void validate(bool require_symmetric = true) const {
    const std::size_t M = b.size();
    if (M == 0) throw InputError("SpinNetwork: needs at least one vertex");
    if (A.rows() != M || A.cols() != M) {
      throw DimensionError("SpinNetwork: A is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                           " but b has length " + std::to_string(M));
    }
    if (!all_finite(A.data()) || !all_finite(b)) throw InputError("SpinNetwork: non-finite parameters");
    for (std::size_t i = 0; i < M; ++i) {
      if (A(i, i) != 0.0) throw StructuralError("SpinNetwork: a_ii must be 0 (vertex " + std::to_string(i) + ")");
      if (require_symmetric)
        for (std::size_t j = 0; j < i; ++j)
          if (A(i, j) != A(j, i)) throw StructuralError("SpinNetwork: A must be symmetric");
    }
  }

  void check_state(const BinaryState& v) const {
    if (v.size() != size()) throw DimensionError("state has length " + std::to_string(v.size()) + ", expected " + std::to_string(size()));
    for (int x : v)
      if (x != 0 && x != 1) throw InputError("state entries must be 0 or 1");
  }
};

/// H(v) = sum_i v_i b_i - 1/2 sum_{i,j} v_i v_j a_ij.
inline double energy(const SpinNetwork& net, const BinaryState& v) {
  net.check_state(v);
  const std::size_t M = net.size();
  double h = 0.0, pair = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    if (!v[i]) continue;
    h += net.b[i];
    for (std::size_t j = 0; j < M; ++j)
      if (v[j]) pair += net.A(i, j);
  }
  return h - 0.5 * pair;
}

/// Balanced: p_i = 1 / (1 + exp(b_i - sum_j a_ij v_j)), the Glauber rule for
/// exp(-H). Literal: p_i = 1 / (1 + exp(b_i + sum_j a_ij v_j)).
enum class SignConvention { Balanced, Literal };

inline std::string to_string(SignConvention c) { return c == SignConvention::Balanced ? "balanced" : "literal"; }

inline double local_field(const SpinNetwork& net, const BinaryState& v, std::size_t i, SignConvention conv) {
  double s = 0.0;
  for (std::size_t j = 0; j < net.size(); ++j)
    if (v[j]) s += net.A(i, j);
  return conv == SignConvention::Balanced ? net.b[i] - s : net.b[i] + s;
}

/// Probability that site i is set to 1 when resampled.
inline double activation_probability(const SpinNetwork& net, const BinaryState& v, std::size_t i,
                                     SignConvention conv = SignConvention::Balanced) {
  return 1.0 / (1.0 + std::exp(local_field(net, v, i, conv)));
}

/// Asynchronous update: one uniformly chosen site is resampled.
inline BinaryState boltzmann_step(const SpinNetwork& net, BinaryState v, SeededRng& rng,
                                  SignConvention conv = SignConvention::Balanced) {
  net.check_state(v);
  const auto i = static_cast<std::size_t>(rng.uniform_index(net.size()));
  v[i] = rng.uniform() < activation_probability(net, v, i, conv) ? 1 : 0;
  return v;
}

enum class HopfieldRule { Threshold, Literal };
enum class UpdateOrder { Synchronous, Sequential };

struct HopfieldOptions {
  HopfieldRule rule = HopfieldRule::Threshold;
  UpdateOrder order = UpdateOrder::Sequential;
  SignConvention convention = SignConvention::Balanced;
};

/// Deterministic update: site i becomes 1 iff p_i > 1/2 (threshold rule) or
/// p_i > 0 (literal rule, which sets every site to 1 for the logistic p).
/// Sequential order sweeps sites 0..M-1 using updated values.
inline BinaryState hopfield_step(const SpinNetwork& net, const BinaryState& v, const HopfieldOptions& opt = {}) {
  net.check_state(v);
  const double cut = opt.rule == HopfieldRule::Threshold ? 0.5 : 0.0;
  BinaryState out = v;
  const BinaryState& source = opt.order == UpdateOrder::Synchronous ? v : out;
  for (std::size_t i = 0; i < net.size(); ++i)
    out[i] = activation_probability(net, source, i, opt.convention) > cut ? 1 : 0;
  return out;
}

inline bool is_hopfield_fixed_point(const SpinNetwork& net, const BinaryState& v, const HopfieldOptions& opt = {}) {
  return hopfield_step(net, v, opt) == v;
}

/// Lexicographic index with v_1 as the most significant bit.
inline std::size_t state_index(const BinaryState& v) {
  std::size_t idx = 0;
  for (int x : v) idx = (idx << 1) | static_cast<std::size_t>(x);
  return idx;
}

inline BinaryState state_from_index(std::size_t idx, std::size_t M) {
  BinaryState v(M);
  for (std::size_t k = 0; k < M; ++k) v[M - 1 - k] = static_cast<int>((idx >> k) & 1U);
  return v;
}

/// Normalized exp(-H) over given energies, shifted by the minimum.
inline Vector gibbs_weights(const Vector& energies) {
  const double lo = *std::min_element(energies.begin(), energies.end());
  Vector p(energies.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(-(energies[k] - lo));
    z += p[k];
  }
  for (double& x : p) x /= z;
  return p;
}

/// exp(-H(v)) / Z in lexicographic state order.
inline Vector boltzmann_exact_distribution(const SpinNetwork& net) {
  net.validate();
  const std::size_t M = net.size();
  if (M > kEnumerationCap) {
    throw CapacityError("boltzmann_exact_distribution: M=" + std::to_string(M) + " exceeds the enumeration cap " +
                        std::to_string(kEnumerationCap));
  }
  const std::size_t n = std::size_t{1} << M;
  Vector H(n);
  for (std::size_t k = 0; k < n; ++k) H[k] = energy(net, state_from_index(k, M));
  return gibbs_weights(H);
}

inline io::CsvTable distribution_table(const Vector& p) {
  io::CsvTable t({"state_index", "probability"});
  for (std::size_t k = 0; k < p.size(); ++k) t.add({k, p[k]});
  return t;
}

/// Largest |p(v) P(v -> w) - p(w) P(w -> v)| over single-site flips, with
/// P(v -> w) = (1/M) * probability of resampling site i to w_i.
inline double detailed_balance_violation(const SpinNetwork& net, SignConvention conv) {
  const Vector p = boltzmann_exact_distribution(net);
  const std::size_t M = net.size();
  const double pick = 1.0 / static_cast<double>(M);
  auto move = [&](const BinaryState& from, std::size_t i, int to) {
    const double q = activation_probability(net, from, i, conv);
    return pick * (to ? q : 1.0 - q);
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const BinaryState v = state_from_index(k, M);
    for (std::size_t i = 0; i < M; ++i) {
      if (v[i]) continue;
      BinaryState w = v;
      w[i] = 1;
      const double lhs = p[k] * move(v, i, 1);
      const double rhs = p[state_index(w)] * move(w, i, 0);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

inline double total_variation(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw DimensionError("total_variation: lengths differ");
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return 0.5 * s;
}

struct GibbsReport {
  double tv_distance = 0.0;
  /// Independent-sample estimate of the TV fluctuation,
  /// 1/2 sum_v sqrt(p(v) (1 - p(v)) / n); correlated chains exceed it.
  double monte_carlo_error = 0.0;
  std::size_t samples = 0;
  bool low_confidence = false;
  Vector empirical;
  Vector exact;
};

inline constexpr std::size_t kGibbsExactCap = 12;

/// Occupation frequencies of the single-site Glauber chain after `burn_in`
/// steps, compared with the exact Boltzmann distribution.
inline GibbsReport gibbs_stationary_check(const SpinNetwork& net, std::size_t steps, std::size_t burn_in, SeededRng& rng,
                                          SignConvention conv = SignConvention::Balanced,
                                          BinaryState start = {}) {
  net.validate();
  const std::size_t M = net.size();
  if (M > kGibbsExactCap) {
    throw CapacityError("gibbs_stationary_check: M=" + std::to_string(M) + " exceeds " + std::to_string(kGibbsExactCap));
  }
  if (start.empty()) start.assign(M, 0);
  net.check_state(start);
  GibbsReport rep;
  rep.exact = boltzmann_exact_distribution(net);
  Vector counts(rep.exact.size(), 0.0);
  BinaryState v = std::move(start);
  for (std::size_t s = 0; s < burn_in; ++s) v = boltzmann_step(net, std::move(v), rng, conv);
  for (std::size_t s = 0; s < steps; ++s) {
    v = boltzmann_step(net, std::move(v), rng, conv);
    counts[state_index(v)] += 1.0;
  }
  if (steps == 0) {
    counts[state_index(v)] = 1.0;
    rep.low_confidence = true;
  }
  rep.samples = std::max<std::size_t>(steps, 1);
  rep.empirical = counts;
  for (double& c : rep.empirical) c /= static_cast<double>(rep.samples);
  rep.tv_distance = total_variation(rep.empirical, rep.exact);
  for (double q : rep.exact) rep.monte_carlo_error += 0.5 * std::sqrt(q * (1.0 - q) / static_cast<double>(rep.samples));
  return rep;
}

/// TV distance after each requested step count, one fresh chain per entry
/// seeded from rng.split(k).
inline io::CsvTable gibbs_tv_trace(const SpinNetwork& net, const std::vector<std::size_t>& step_counts, std::size_t burn_in,
                                   const SeededRng& rng, SignConvention conv = SignConvention::Balanced) {
  io::CsvTable t({"steps", "tv_distance"});
  for (std::size_t k = 0; k < step_counts.size(); ++k) {
    SeededRng chain = rng.split(k);
    t.add({step_counts[k], gibbs_stationary_check(net, step_counts[k], burn_in, chain, conv).tv_distance});
  }
  return t;
}

/// Marginal of the Boltzmann distribution on the first d sites (visible),
/// summing over the remaining hidden sites.
inline Vector visible_marginal(const SpinNetwork& net, std::size_t d) {
  const std::size_t M = net.size();
  if (d == 0 || d > M) throw InputError("visible count must satisfy 1 <= d <= M");
  const Vector p = boltzmann_exact_distribution(net);
  Vector out(std::size_t{1} << d, 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) out[k >> (M - d)] += p[k];
  return out;
}

/// KL(P+ || P-) with P- the visible marginal of the model.
inline double kl_objective(const Vector& p_plus, const SpinNetwork& net, std::size_t d) {
  const Vector p_minus = visible_marginal(net, d);
  if (p_plus.size() != p_minus.size()) {
    throw DimensionError("kl_objective: P+ has " + std::to_string(p_plus.size()) + " entries, expected 2^d = " +
                         std::to_string(p_minus.size()));
  }
  double total = 0.0;
  for (double q : p_plus) {
    if (!(q >= 0.0)) throw InputError("kl_objective: P+ has negative entries");
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("kl_objective: P+ must sum to 1");
  for (double q : p_minus)
    if (!(q > 0.0)) throw EvaluationError("kl_objective: model marginal underflowed to zero");
  return kl_divergence(p_plus, p_minus);
}

}  // namespace dynlab::discrete_ips
