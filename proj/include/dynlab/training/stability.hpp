#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dynlab/io/csv.hpp"
#include "dynlab/training/gd.hpp"

namespace dynlab::training {

inline constexpr double kManifoldTol = 1e-9;
inline constexpr double kEdgeBand = 1e-9;

struct ManifoldSplit {
  Matrix tangent;  // D x k, orthonormal columns
  Matrix normal;   // D x (D - k)
  Vector eigenvalues;
  std::size_t expected_tangent_dim = 0;
  /// Tangent dimension differs from D - qN.
  bool dimension_mismatch = false;
  /// Hessian vanished; everything was labeled tangent.
  bool zero_hessian = false;
};

/// Eigen-split of the loss Hessian at an interpolation point: eigenvalues at
/// most rank_tol * max |eigenvalue| span the tangent space, the rest the
/// normal space.
inline ManifoldSplit tangent_normal_split(const LossModel& model, const Vector& theta_star, double rank_tol = 1e-6) {
  const double res = model.residual(theta_star);
  if (res > kManifoldTol) {
    throw InputError("tangent_normal_split: point is not on the interpolation manifold (residual " +
                     io::format_real(res) + ")");
  }
  const std::size_t D = model.parameter_dim();
  const std::size_t qn = model.data().output_dim() * model.sample_count();
  const SymEigen eig = sym_eigen(hessian(model, theta_star));
  double scale = 0.0;
  for (double v : eig.values) scale = std::max(scale, std::abs(v));
  std::vector<std::size_t> tan_idx, nor_idx;
  for (std::size_t k = 0; k < D; ++k) {
    if (std::abs(eig.values[k]) <= rank_tol * scale) {
      tan_idx.push_back(k);
    } else {
      nor_idx.push_back(k);
    }
  }
  ManifoldSplit out;
  out.eigenvalues = eig.values;
  out.zero_hessian = scale == 0.0;
  out.tangent = Matrix(D, tan_idx.size());
  out.normal = Matrix(D, nor_idx.size());
  for (std::size_t j = 0; j < tan_idx.size(); ++j) out.tangent.set_col(j, eig.vectors.col(tan_idx[j]));
  for (std::size_t j = 0; j < nor_idx.size(); ++j) out.normal.set_col(j, eig.vectors.col(nor_idx[j]));
  out.expected_tangent_dim = D > qn ? D - qn : 0;
  out.dimension_mismatch = tan_idx.size() != out.expected_tangent_dim;
  return out;
}

enum class StabilityVerdict { Stable, Edge, Unstable };

inline std::string to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::Stable: return "stable";
    case StabilityVerdict::Edge: return "edge";
    case StabilityVerdict::Unstable: return "unstable";
  }
  return "?";
}

struct SpectralStability {
  double sharpness = 0.0;
  double threshold = 0.0;
  Vector eigenvalues;
  StabilityVerdict verdict = StabilityVerdict::Stable;
  bool gd_stable() const { return verdict == StabilityVerdict::Stable; }
};

inline StabilityVerdict compare_to_threshold(double sharpness, double eta) {
  const double threshold = 2.0 / eta;
  if (std::abs(sharpness - threshold) <= kEdgeBand) return StabilityVerdict::Edge;
  return sharpness < threshold ? StabilityVerdict::Stable : StabilityVerdict::Unstable;
}

/// Sharpness (largest Hessian eigenvalue) against 2 / eta.
inline SpectralStability spectral_stability(const LossModel& model, const Vector& theta_star, double eta) {
  if (!(eta > 0.0)) throw InputError("spectral_stability: eta must be positive");
  SpectralStability out;
  out.eigenvalues = sym_eigen(hessian(model, theta_star)).values;
  out.sharpness = out.eigenvalues.back();
  out.threshold = 2.0 / eta;
  out.verdict = compare_to_threshold(out.sharpness, eta);
  return out;
}

inline double sharpness(const LossModel& model, const Vector& theta) {
  return sym_eigen(hessian(model, theta)).values.back();
}

struct EosRow {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double sharpness = 0.0;
  double threshold = 0.0;
};

struct EosTrace {
  std::vector<EosRow> rows;
  Vector final_theta;
  double final_residual = 0.0;
  bool diverged = false;

  double terminal_sharpness() const { return rows.back().sharpness; }

  io::CsvTable table() const {
    io::CsvTable t({"step", "loss", "grad_norm", "sharpness", "threshold"});
    for (const auto& r : rows) t.add({r.step, r.loss, r.grad_norm, r.sharpness, r.threshold});
    return t;
  }
};

/// Gradient descent with the sharpness evaluated at every `stride`-th iterate
/// and at the last one.
inline EosTrace edge_of_stability_trace(const LossModel& model, const Vector& theta0, GDConfig cfg, std::size_t stride) {
  if (stride == 0) throw ConfigError("stride", "must be >= 1");
  cfg.stride = stride;
  const Trajectory tr = gd_run(model, theta0, cfg);
  EosTrace out;
  out.diverged = tr.diverged;
  for (const auto& p : tr.points) {
    const double s = all_finite(p.theta) && std::isfinite(p.loss) ? sharpness(model, p.theta) : std::nan("");
    out.rows.push_back({p.step, p.loss, p.grad_norm, s, 2.0 / cfg.eta});
  }
  out.final_theta = tr.last().theta;
  out.final_residual = tr.diverged ? std::nan("") : model.residual(out.final_theta);
  return out;
}

}  // namespace dynlab::training
