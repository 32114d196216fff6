#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "dynlab/networks/mlp.hpp"
#include "dynlab/numerics/finite_diff.hpp"
#include "dynlab/numerics/linalg.hpp"
#include "dynlab/numerics/rng.hpp"

namespace dynlab::training {

struct Dataset {
  std::vector<Vector> xs;
  std::vector<Vector> ys;

  std::size_t size() const { return xs.size(); }
  std::size_t input_dim() const { return xs.empty() ? 0 : xs.front().size(); }
  std::size_t output_dim() const { return ys.empty() ? 0 : ys.front().size(); }

  void validate() const {
    if (xs.empty()) throw InputError("dataset needs at least one example");
    if (xs.size() != ys.size()) throw DimensionError("dataset has different numbers of inputs and targets");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i].size() != input_dim() || ys[i].size() != output_dim()) {
        throw DimensionError("dataset example " + std::to_string(i) + " has inconsistent dimensions");
      }
    }
  }
};

/// Differentiable parameter map Phi(theta, x).
class ParamMap {
 public:
  virtual ~ParamMap() = default;
  virtual std::string name() const = 0;
  virtual std::size_t parameter_dim() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual Vector eval(const Vector& theta, const Vector& x) const = 0;
  /// Reverse accumulation: (d Phi / d theta)^T cotangent.
  virtual Vector vjp(const Vector& theta, const Vector& x, const Vector& cotangent) const = 0;
};

/// Phi(theta, x) = theta_1 * ... * theta_D * x (scalar).
class ProductMap final : public ParamMap {
 public:
  explicit ProductMap(std::size_t factors) : factors_(factors) {
    if (factors == 0) throw InputError("ProductMap needs at least one factor");
  }
  std::string name() const override { return "product" + std::to_string(factors_); }
  std::size_t parameter_dim() const override { return factors_; }
  std::size_t input_dim() const override { return 1; }
  std::size_t output_dim() const override { return 1; }
  Vector eval(const Vector& theta, const Vector& x) const override {
    double p = x[0];
    for (double t : theta) p *= t;
    return {p};
  }
  Vector vjp(const Vector& theta, const Vector& x, const Vector& c) const override {
    Vector g(factors_);
    for (std::size_t k = 0; k < factors_; ++k) {
      double p = x[0] * c[0];
      for (std::size_t j = 0; j < factors_; ++j)
        if (j != k) p *= theta[j];
      g[k] = p;
    }
    return g;
  }

 private:
  std::size_t factors_;
};

/// Phi(theta, x) = <theta, x> (scalar output).
class LinearFunctional final : public ParamMap {
 public:
  explicit LinearFunctional(std::size_t d) : d_(d) {}
  std::string name() const override { return "linear-functional"; }
  std::size_t parameter_dim() const override { return d_; }
  std::size_t input_dim() const override { return d_; }
  std::size_t output_dim() const override { return 1; }
  Vector eval(const Vector& theta, const Vector& x) const override { return {dot(theta, x)}; }
  Vector vjp(const Vector&, const Vector& x, const Vector& c) const override { return c[0] * x; }

 private:
  std::size_t d_;
};

/// Phi(theta, x) = R theta, independent of x.
class FixedLinearMap final : public ParamMap {
 public:
  explicit FixedLinearMap(Matrix r) : r_(std::move(r)) {}
  std::string name() const override { return "fixed-linear"; }
  std::size_t parameter_dim() const override { return r_.cols(); }
  std::size_t input_dim() const override { return 1; }
  std::size_t output_dim() const override { return r_.rows(); }
  Vector eval(const Vector& theta, const Vector&) const override { return r_ * theta; }
  Vector vjp(const Vector&, const Vector&, const Vector& c) const override { return r_.transpose_times(c); }

 private:
  Matrix r_;
};

/// MLP whose flattened parameters are theta.
class MLPParamMap final : public ParamMap {
 public:
  explicit MLPParamMap(networks::MLPSpec shape) : shape_(std::move(shape)) { shape_.validate(); }
  std::string name() const override { return "mlp"; }
  std::size_t parameter_dim() const override { return shape_.parameters().size(); }
  std::size_t input_dim() const override { return shape_.layer_dims.front(); }
  std::size_t output_dim() const override { return shape_.layer_dims.back(); }
  Vector eval(const Vector& theta, const Vector& x) const override {
    return networks::mlp_forward(with(theta), x);
  }
  Vector vjp(const Vector& theta, const Vector& x, const Vector& c) const override {
    return networks::mlp_vjp(with(theta), x, c, true).parameters;
  }
  const networks::MLPSpec& shape() const { return shape_; }

 private:
  networks::MLPSpec with(const Vector& theta) const {
    networks::MLPSpec s = shape_;
    s.set_parameters(theta);
    return s;
  }
  networks::MLPSpec shape_;
};

/// Per-example loss: HalfSquared l = |y' - y|^2 / 2, Squared l = |y' - y|^2.
enum class LossKind { HalfSquared, Squared };

enum class Regime { Overdetermined, Critical, Overparameterized };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::Overdetermined: return "overdetermined";
    case Regime::Critical: return "critical";
    case Regime::Overparameterized: return "overparameterized";
  }
  return "?";
}

/// L(theta) = scale * (1/N) sum_i l(Phi(theta, x_i), y_i).
class LossModel {
 public:
  LossModel(std::shared_ptr<const ParamMap> net, Dataset data, LossKind kind, double scale = 1.0)
      : net_(std::move(net)), data_(std::move(data)), kind_(kind), scale_(scale) {
    if (!net_) throw InputError("loss model needs a parameter map");
    data_.validate();
    if (data_.input_dim() != net_->input_dim() || data_.output_dim() != net_->output_dim()) {
      throw DimensionError("dataset dimensions do not match the parameter map");
    }
    if (!(scale_ > 0.0)) throw InputError("loss scale must be positive");
  }

  const ParamMap& network() const { return *net_; }
  const Dataset& data() const { return data_; }
  LossKind kind() const { return kind_; }
  double scale() const { return scale_; }
  std::size_t parameter_dim() const { return net_->parameter_dim(); }
  std::size_t sample_count() const { return data_.size(); }

  Regime regime() const {
    const std::size_t qn = data_.output_dim() * data_.size();
    const std::size_t D = parameter_dim();
    if (D < qn) return Regime::Overdetermined;
    if (D > qn) return Regime::Overparameterized;
    return Regime::Critical;
  }

  /// c * L, with the same network and data.
  LossModel scaled(double c) const { return LossModel(net_, data_, kind_, scale_ * c); }

  double example_loss(const Vector& theta, std::size_t i) const {
    const Vector r = net_->eval(theta, data_.xs[i]) - data_.ys[i];
    const double sq = dot(r, r);
    return scale_ * (kind_ == LossKind::HalfSquared ? 0.5 * sq : sq);
  }

  double loss(const Vector& theta) const { return batch_loss(theta, all_indices()); }
  Vector grad_loss(const Vector& theta) const { return batch_grad(theta, all_indices()); }

  double batch_loss(const Vector& theta, const std::vector<std::size_t>& batch) const {
    check(theta, batch);
    double s = 0.0;
    for (std::size_t i : batch) s += example_loss(theta, i);
    const double v = s / static_cast<double>(batch.size());
    if (!std::isfinite(v)) throw EvaluationError("loss is not finite");
    return v;
  }

  Vector batch_grad(const Vector& theta, const std::vector<std::size_t>& batch) const {
    check(theta, batch);
    const double factor = scale_ * (kind_ == LossKind::HalfSquared ? 1.0 : 2.0);
    Vector g(parameter_dim(), 0.0);
    for (std::size_t i : batch) {
      const Vector r = net_->eval(theta, data_.xs[i]) - data_.ys[i];
      const Vector gi = net_->vjp(theta, data_.xs[i], r);
      axpy(factor, gi, g);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : g) v *= inv;
    if (!all_finite(g)) throw EvaluationError("loss gradient is not finite");
    return g;
  }

  /// max_i |Phi(theta, x_i) - y_i|.
  double residual(const Vector& theta) const {
    double m = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      m = std::max(m, norm2(net_->eval(theta, data_.xs[i]) - data_.ys[i]));
    }
    return m;
  }

  std::vector<std::size_t> all_indices() const {
    std::vector<std::size_t> idx(data_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }

 private:
  void check(const Vector& theta, const std::vector<std::size_t>& batch) const {
    if (theta.size() != parameter_dim()) {
      throw DimensionError("theta has length " + std::to_string(theta.size()) + ", model expects " +
                           std::to_string(parameter_dim()));
    }
    if (batch.empty()) throw InputError("batch must be nonempty");
    for (std::size_t i : batch) {
      if (i >= data_.size()) throw InputError("batch index " + std::to_string(i) + " out of range");
    }
  }

  std::shared_ptr<const ParamMap> net_;
  Dataset data_;
  LossKind kind_;
  double scale_;
};

/// L(theta) = theta^T Q theta / 2 for symmetric positive semidefinite Q.
inline LossModel quadratic_model(const Matrix& Q) {
  const SymEigen eig = sym_eigen(Q);
  const double tol = 1e-12 * std::max(1.0, Q.max_abs());
  Matrix r(Q.rows(), Q.cols());
  for (std::size_t k = 0; k < Q.rows(); ++k) {
    const double lambda = eig.values[k];
    if (lambda < -tol) throw InputError("quadratic_model: Q must be positive semidefinite");
    const double s = std::sqrt(std::max(lambda, 0.0));
    for (std::size_t j = 0; j < Q.cols(); ++j) r(k, j) = s * eig.vectors(j, k);
  }
  Dataset data{{Vector{0.0}}, {Vector(Q.rows(), 0.0)}};
  return LossModel(std::make_shared<FixedLinearMap>(r), data, LossKind::HalfSquared);
}

/// L(theta) = (1 - theta_1 theta_2)^2 with the plain squared error. The
/// half-squared variant gives (1 - theta_1 theta_2)^2 / 2.
inline LossModel prod2_model(LossKind kind = LossKind::Squared) {
  return LossModel(std::make_shared<ProductMap>(2), Dataset{{Vector{1.0}}, {Vector{1.0}}}, kind);
}

/// Phi(theta, x) = theta x on {(1, 0), (2, 0)} with the half-squared error.
inline LossModel two_point_scalar_model() {
  return LossModel(std::make_shared<LinearFunctional>(1), Dataset{{Vector{1.0}, Vector{2.0}}, {Vector{0.0}, Vector{0.0}}},
                   LossKind::HalfSquared);
}

/// Random regression problem for an MLP of the given dims: N Gaussian inputs,
/// targets from a second random MLP of the same shape.
inline LossModel mlp_regression_model(const std::vector<std::size_t>& dims, networks::Activation act,
                                      std::size_t samples, SeededRng& rng) {
  const networks::MLPSpec shape = networks::random_mlp(dims, act, rng);
  const networks::MLPSpec teacher = networks::random_mlp(dims, act, rng);
  Dataset data;
  for (std::size_t i = 0; i < samples; ++i) {
    Vector x(dims.front());
    for (double& v : x) v = rng.normal();
    data.ys.push_back(networks::mlp_forward(teacher, x));
    data.xs.push_back(std::move(x));
  }
  return LossModel(std::make_shared<MLPParamMap>(shape), std::move(data), LossKind::HalfSquared);
}

/// Symmetrized central-difference Hessian of the analytic gradient.
inline Matrix hessian(const LossModel& model, const Vector& theta,
                      const std::vector<std::size_t>& batch = {}) {
  const auto idx = batch.empty() ? model.all_indices() : batch;
  Matrix H = finite_diff_jacobian([&](const Vector& t) { return model.batch_grad(t, idx); }, theta);
  for (std::size_t i = 0; i < H.rows(); ++i) {
    for (std::size_t j = i + 1; j < H.cols(); ++j) {
      const double s = 0.5 * (H(i, j) + H(j, i));
      H(i, j) = H(j, i) = s;
    }
  }
  return H;
}

/// Relative error |g - fd| / max(|g|, |fd|) between the reverse-mode gradient
/// and central differences of the loss (0 when both vanish).
inline double gradient_check(const LossModel& model, const Vector& theta) {
  const Vector g = model.grad_loss(theta);
  const Vector fd = finite_diff_gradient([&](const Vector& t) { return model.loss(t); }, theta);
  const double denom = std::max(norm2(g), norm2(fd));
  return denom == 0.0 ? 0.0 : norm2(g - fd) / denom;
}

}  // namespace dynlab::training
