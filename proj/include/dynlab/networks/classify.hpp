#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "dynlab/numerics/linalg.hpp"

namespace dynlab::networks {

enum class ArchClass { NonAugmented, Augmented, Bottleneck, Degenerate };

inline std::string to_string(ArchClass c) {
  switch (c) {
    case ArchClass::NonAugmented: return "non-augmented";
    case ArchClass::Augmented: return "augmented";
    case ArchClass::Bottleneck: return "bottleneck";
    case ArchClass::Degenerate: return "degenerate";
  }
  return "?";
}

inline void check_layer_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw InputError("layer dims need at least two entries");
  for (auto d : dims)
    if (d < 1) throw InputError("layer dims must be >= 1");
}

/// d_{l-1} >= d_l for every layer.
inline bool is_non_augmented(const std::vector<std::size_t>& dims) {
  check_layer_dims(dims);
  for (std::size_t l = 1; l < dims.size(); ++l)
    if (dims[l - 1] < dims[l]) return false;
  return true;
}

/// A widest layer exceeds d_0, the dims rise (weakly) up to it and fall
/// (weakly) after it. Plateaus at the maximum are allowed.
inline bool is_augmented(const std::vector<std::size_t>& dims) {
  check_layer_dims(dims);
  const auto max_it = std::max_element(dims.begin(), dims.end());
  if (*max_it <= dims.front()) return false;
  const std::size_t lmax = static_cast<std::size_t>(max_it - dims.begin());
  for (std::size_t l = 1; l <= lmax; ++l)
    if (dims[l - 1] > dims[l]) return false;
  for (std::size_t l = lmax + 1; l < dims.size(); ++l)
    if (dims[l - 1] < dims[l]) return false;
  return true;
}

/// Some layer is strictly narrower than an earlier and a later layer.
inline bool has_bottleneck(const std::vector<std::size_t>& dims) {
  check_layer_dims(dims);
  const std::size_t n = dims.size();
  std::vector<std::size_t> prefix_max(n), suffix_max(n);
  prefix_max[0] = dims[0];
  for (std::size_t i = 1; i < n; ++i) prefix_max[i] = std::max(prefix_max[i - 1], dims[i]);
  suffix_max[n - 1] = dims[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) suffix_max[i] = std::max(suffix_max[i + 1], dims[i]);
  for (std::size_t l = 1; l + 1 < n; ++l)
    if (prefix_max[l - 1] > dims[l] && dims[l] < suffix_max[l + 1]) return true;
  return false;
}

inline ArchClass classify_fnn(const std::vector<std::size_t>& dims) {
  if (is_non_augmented(dims)) return ArchClass::NonAugmented;
  if (is_augmented(dims)) return ArchClass::Augmented;
  return ArchClass::Bottleneck;
}

/// Neural ODE/DDE trichotomy from the lift W (m x d) and projection W_out
/// (q x m). Rank deficiency uses smallest singular value < 1e-10 * largest.
inline ArchClass classify_ode_arch(std::size_t d, std::size_t m, std::size_t q, const Matrix& W,
                                   const Matrix& W_out) {
  if (W.rows() != m || W.cols() != d) {
    throw StructuralError("W must be " + std::to_string(m) + "x" + std::to_string(d) + ", got " + W.shape());
  }
  if (W_out.rows() != q || W_out.cols() != m) {
    throw StructuralError("W_out must be " + std::to_string(q) + "x" + std::to_string(m) + ", got " +
                          W_out.shape());
  }
  const bool w_full = numerical_rank(W, 1e-10) == std::min(m, d);
  const bool wo_full = numerical_rank(W_out, 1e-10) == std::min(q, m);
  if (!w_full || !wo_full) return ArchClass::Degenerate;
  return m > std::max(d, q) ? ArchClass::Augmented : ArchClass::NonAugmented;
}

}  // namespace dynlab::networks
