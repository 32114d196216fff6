#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "dynlab/errors.hpp"
#include "dynlab/training/model.hpp"

namespace dynlab::training {

inline constexpr double kDivergenceGuard = 1e12;

struct GDConfig {
  double eta = 0.1;
  std::size_t max_steps = 1000;
  double stop_grad_tol = 0.0;
  /// Optional: stop once the loss drops to this value.
  double stop_loss = -1.0;
  /// Keep every `stride`-th iterate (the final one is always kept).
  std::size_t stride = 1;
  /// Mini-batch size for SGD; unset means full-batch GD.
  std::optional<std::size_t> batch_size;

  void validate() const {
    if (!(eta > 0.0)) throw ConfigError("eta", "learning rate must be positive");
    if (stride == 0) throw ConfigError("stride", "must be >= 1");
  }
};

struct TrajectoryPoint {
  std::size_t step = 0;
  Vector theta;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  /// Batch drawn at every step (SGD only), for replay.
  std::vector<std::vector<std::size_t>> batches;
  bool diverged = false;
  std::size_t steps_taken = 0;

  const TrajectoryPoint& last() const { return points.back(); }
};

namespace detail {

inline bool blown_up(const Vector& theta) { return !all_finite(theta) || norm2(theta) > kDivergenceGuard; }

/// Shared driver for GD and SGD. `next_batch` returns the batch for the step
/// or an empty vector for the full data set.
template <class NextBatch>
Trajectory descend(const LossModel& model, Vector theta, const GDConfig& cfg, NextBatch&& next_batch) {
  cfg.validate();
  Trajectory tr;
  const auto all = model.all_indices();
  auto record = [&](std::size_t n, const Vector& th, double l, double gn, bool force) {
    if (force || n % cfg.stride == 0) tr.points.push_back({n, th, l, gn});
  };
  double l = model.loss(theta);
  Vector g = model.grad_loss(theta);
  double gn = norm2(g);
  for (std::size_t n = 0;; ++n) {
    const bool stop = n == cfg.max_steps || gn <= cfg.stop_grad_tol || l <= cfg.stop_loss;
    record(n, theta, l, gn, stop);
    if (stop) break;
    auto batch = next_batch();
    const Vector step_grad = batch.empty() ? g : model.batch_grad(theta, batch);
    if (!batch.empty()) tr.batches.push_back(std::move(batch));
    axpy(-cfg.eta, step_grad, theta);
    tr.steps_taken = n + 1;
    if (blown_up(theta)) {
      tr.diverged = true;
      tr.points.push_back({n + 1, theta, std::nan(""), std::nan("")});
      break;
    }
    try {
      l = model.loss(theta);
      g = model.grad_loss(theta);
    } catch (const EvaluationError&) {
      tr.diverged = true;
      tr.points.push_back({n + 1, theta, std::nan(""), std::nan("")});
      break;
    }
    gn = norm2(g);
  }
  return tr;
}

}  // namespace detail

/// theta_{n+1} = theta_n - eta grad L(theta_n). Divergence (|theta| > 1e12 or
/// a non-finite value) ends the run with `diverged` set.
inline Trajectory gd_run(const LossModel& model, const Vector& theta0, const GDConfig& cfg) {
  if (cfg.batch_size) throw ConfigError("batch_size", "gd_run is full-batch; use sgd_run");
  return detail::descend(model, theta0, cfg, [] { return std::vector<std::size_t>{}; });
}

/// theta_{n+1} = theta_n - eta grad L_Xi(theta_n) with Xi uniform over
/// B-subsets, drawn independently each step from `rng`. The stream advances
/// by exactly the draws used, so runs compose: n + m steps equal m steps
/// followed by n steps from the advanced stream.
inline Trajectory sgd_run(const LossModel& model, const Vector& theta0, const GDConfig& cfg, SeededRng& rng) {
  if (!cfg.batch_size) throw ConfigError("batch_size", "sgd_run needs a batch size");
  const std::size_t B = *cfg.batch_size;
  const std::size_t N = model.sample_count();
  if (B < 1 || B >= N) {
    throw ConfigError("batch_size", "must satisfy 1 <= B < N (B=" + std::to_string(B) + ", N=" + std::to_string(N) + ")");
  }
  return detail::descend(model, theta0, cfg, [&] { return rng.subset(N, B); });
}

struct MinimumSchedule {
  double eta = 0.1;
  std::size_t steps_per_stage = 2000;
  std::size_t max_stages = 20;
  double shrink = 0.5;
  double manifold_tol = 1e-9;
};

struct MinimumReport {
  Vector theta;
  double loss = 0.0;
  double residual = 0.0;
  bool on_manifold = false;
  double final_eta = 0.0;
  std::size_t total_steps = 0;
};

/// Gradient descent that shrinks eta whenever a stage diverges or stops
/// improving the loss, until the interpolation residual is below tolerance.
inline MinimumReport find_minimum(const LossModel& model, const Vector& theta0, const MinimumSchedule& sched = {}) {
  MinimumReport rep;
  rep.theta = theta0;
  rep.loss = model.loss(theta0);
  rep.residual = model.residual(theta0);
  double eta = sched.eta;
  for (std::size_t stage = 0; stage < sched.max_stages && rep.residual > sched.manifold_tol; ++stage) {
    GDConfig cfg;
    cfg.eta = eta;
    cfg.max_steps = sched.steps_per_stage;
    cfg.stride = sched.steps_per_stage;
    const auto tr = gd_run(model, rep.theta, cfg);
    rep.total_steps += tr.steps_taken;
    const auto& end = tr.last();
    if (!tr.diverged && end.loss < rep.loss) {
      rep.theta = end.theta;
      rep.loss = end.loss;
      rep.residual = model.residual(rep.theta);
      if (end.grad_norm == 0.0) break;
    } else {
      eta *= sched.shrink;
    }
  }
  rep.final_eta = eta;
  rep.on_manifold = rep.residual <= sched.manifold_tol;
  return rep;
}

}  // namespace dynlab::training
