#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "dynlab/errors.hpp"

namespace dynlab::networks {

/// Strictly monotone scalar activations. Plain ReLU is deliberately absent
/// (flat on the negative half-line).
class Activation {
 public:
  enum class Kind { Tanh, Softplus, Sigmoid, LeakyRelu, Identity };

  Activation() = default;
  static Activation tanh() { return Activation(Kind::Tanh); }
  static Activation softplus() { return Activation(Kind::Softplus); }
  static Activation sigmoid() { return Activation(Kind::Sigmoid); }
  static Activation identity() { return Activation(Kind::Identity); }
  static Activation leaky_relu(double slope) {
    if (!(slope > 0.0)) throw InputError("leaky-relu slope must be > 0, got " + std::to_string(slope));
    Activation a(Kind::LeakyRelu);
    a.slope_ = slope;
    return a;
  }

  /// Accepts "tanh", "softplus", "sigmoid", "identity", "leaky-relu" and
  /// "leaky-relu:<slope>".
  static Activation parse(const std::string& name) {
    if (name == "tanh") return tanh();
    if (name == "softplus") return softplus();
    if (name == "sigmoid") return sigmoid();
    if (name == "identity") return identity();
    if (name == "leaky-relu") return leaky_relu(0.01);
    if (name.rfind("leaky-relu:", 0) == 0) return leaky_relu(std::stod(name.substr(11)));
    if (name == "relu") throw InputError("activation 'relu' is not strictly monotone; use leaky-relu");
    throw InputError("unknown activation '" + name + "'");
  }

  Kind kind() const noexcept { return kind_; }
  double slope() const noexcept { return slope_; }

  std::string name() const {
    switch (kind_) {
      case Kind::Tanh: return "tanh";
      case Kind::Softplus: return "softplus";
      case Kind::Sigmoid: return "sigmoid";
      case Kind::Identity: return "identity";
      case Kind::LeakyRelu: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "leaky-relu:%.17g", slope_);
        return buf;
      }
    }
    return "?";
  }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::Tanh: return std::tanh(x);
      case Kind::Softplus: return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      case Kind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
      case Kind::LeakyRelu: return x >= 0.0 ? x : slope_ * x;
      case Kind::Identity: return x;
    }
    return x;
  }

  double derivative(double x) const {
    switch (kind_) {
      case Kind::Tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      }
      case Kind::Softplus: return 1.0 / (1.0 + std::exp(-x));
      case Kind::Sigmoid: {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      }
      case Kind::LeakyRelu: return x >= 0.0 ? 1.0 : slope_;
      case Kind::Identity: return 1.0;
    }
    return 1.0;
  }

  bool operator==(const Activation&) const = default;

 private:
  explicit Activation(Kind k) : kind_(k) {}
  Kind kind_ = Kind::Identity;
  double slope_ = 0.0;
};

}  // namespace dynlab::networks
