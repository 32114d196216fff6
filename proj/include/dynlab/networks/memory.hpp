#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "dynlab/numerics/matrix.hpp"
#include "dynlab/numerics/rng.hpp"

namespace dynlab::networks {

/// Target function data for the embedding criterion: Lipschitz constant K_psi
/// and weight bounds w, w_out.
struct EmbeddingTarget {
  double lipschitz = 0.0;
  double w = 1.0;
  double w_out = 1.0;
};

/// Memory capacity K*tau of a neural DDE and the two regime flags derived
/// from it. Flags are computed on demand, never stored.
///
/// `small_memory()` (K tau e < 1) marks the regime where a non-approximation
/// threshold tau_0(K) can exist; it is a candidate indicator only, since
/// tau_0 is not known explicitly. `embed_capable()` is the sufficient
/// condition K tau >= 2 (1 + K_psi / (w w_out)), boundary inclusive. Both can
/// be false at once.
struct MemoryReport {
  double K = 0.0;
  double tau = 0.0;
  std::optional<EmbeddingTarget> target;

  double capacity() const { return K * tau; }
  bool small_memory() const { return capacity() * std::numbers::e < 1.0; }
  bool embed_capable() const {
    if (!target) return false;
    return capacity() >= 2.0 * (1.0 + target->lipschitz / (target->w * target->w_out));
  }
};

inline MemoryReport memory_report(double K, double tau, std::optional<EmbeddingTarget> target = std::nullopt) {
  if (!(K >= 0.0)) throw InputError("memory_report: K must be >= 0");
  if (!(tau >= 0.0)) throw InputError("memory_report: tau must be >= 0");
  if (target) {
    if (!(target->w > 0.0) || !(target->w_out > 0.0)) throw InputError("memory_report: w and w_out must be > 0");
    if (!(target->lipschitz >= 0.0)) throw InputError("memory_report: K_psi must be >= 0");
  }
  return MemoryReport{K, tau, target};
}

/// Sampled lower bound on the Lipschitz constant of `f` over a box:
/// max |f(a) - f(b)| / |a - b| over random pairs.
template <class F>
double estimate_lipschitz_lower_bound(F&& f, const Vector& lo, const Vector& hi, SeededRng& rng,
                                      std::size_t pairs = 10000) {
  double best = 0.0;
  Vector a(lo.size()), b(lo.size());
  for (std::size_t p = 0; p < pairs; ++p) {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      a[i] = rng.uniform(lo[i], hi[i]);
      b[i] = rng.uniform(lo[i], hi[i]);
    }
    const double dx = norm2(a - b);
    if (dx == 0.0) continue;
    best = std::max(best, norm2(f(a) - f(b)) / dx);
  }
  return best;
}

}  // namespace dynlab::networks
