#pragma once

// Feed-forward architectures: MLP, ResNet and DenseResNet.
//
// One MLP layer maps h -> W_out * sigma(W h + b) + b_out. The inner width of
// a layer (rows of W) is independent of the layer dims d_l, d_{l+1}.

#include <functional>
#include <string>
#include <vector>

#include "dynlab/networks/activation.hpp"
#include "dynlab/numerics/matrix.hpp"
#include "dynlab/numerics/rng.hpp"

namespace dynlab::networks {

struct MLPLayer {
  Matrix W;      // inner x d_l
  Vector b;      // inner
  Matrix W_out;  // d_{l+1} x inner
  Vector b_out;  // d_{l+1}
  Activation activation = Activation::tanh();

  std::size_t in_dim() const { return W.cols(); }
  std::size_t inner_dim() const { return W.rows(); }
  std::size_t out_dim() const { return W_out.rows(); }
  std::size_t parameter_count() const { return W.size() + W_out.size() + b.size() + b_out.size(); }

  Vector pre_activation(std::span<const double> h) const {
    Vector z = W * h;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += b[i];
    return z;
  }

  Vector apply(std::span<const double> h) const {
    Vector z = pre_activation(h);
    for (double& v : z) v = activation(v);
    Vector out = W_out * z;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b_out[i];
    return out;
  }
};

struct MLPSpec {
  std::vector<std::size_t> layer_dims;  // d_0 .. d_L
  std::vector<MLPLayer> layers;         // L layers

  std::size_t depth() const { return layers.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  /// Throws StructuralError naming the first layer whose shapes do not chain.
  void validate() const {
    if (layer_dims.size() < 2) throw StructuralError("MLP needs at least two layer dims");
    if (layers.size() + 1 != layer_dims.size()) {
      throw StructuralError("MLP has " + std::to_string(layers.size()) + " layers but " +
                            std::to_string(layer_dims.size()) + " layer dims");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& ly = layers[l];
      const std::string where = "layer " + std::to_string(l) + ": ";
      if (ly.W.cols() != layer_dims[l]) {
        throw StructuralError(where + "W is " + ly.W.shape() + " but d_" + std::to_string(l) +
                              " = " + std::to_string(layer_dims[l]));
      }
      if (ly.b.size() != ly.W.rows()) throw StructuralError(where + "bias b length != rows of W");
      if (ly.W_out.cols() != ly.W.rows()) {
        throw StructuralError(where + "W_out is " + ly.W_out.shape() + " but inner width is " +
                              std::to_string(ly.W.rows()));
      }
      if (ly.W_out.rows() != layer_dims[l + 1]) {
        throw StructuralError(where + "W_out has " + std::to_string(ly.W_out.rows()) +
                              " rows but d_" + std::to_string(l + 1) + " = " +
                              std::to_string(layer_dims[l + 1]));
      }
      if (ly.b_out.size() != layer_dims[l + 1]) throw StructuralError(where + "bias b_out length != d_{l+1}");
    }
  }

  /// Flattened parameters: per layer W (row-major), W_out, b, b_out.
  Vector parameters() const {
    Vector theta;
    theta.reserve(parameter_count());
    for (const auto& l : layers) {
      theta.insert(theta.end(), l.W.data().begin(), l.W.data().end());
      theta.insert(theta.end(), l.W_out.data().begin(), l.W_out.data().end());
      theta.insert(theta.end(), l.b.begin(), l.b.end());
      theta.insert(theta.end(), l.b_out.begin(), l.b_out.end());
    }
    return theta;
  }

  void set_parameters(std::span<const double> theta) {
    if (theta.size() != parameter_count()) {
      throw DimensionError("MLP expects " + std::to_string(parameter_count()) +
                           " parameters, got " + std::to_string(theta.size()));
    }
    std::size_t k = 0;
    auto take = [&](std::vector<double>& dst) {
      std::copy(theta.begin() + static_cast<std::ptrdiff_t>(k),
                theta.begin() + static_cast<std::ptrdiff_t>(k + dst.size()), dst.begin());
      k += dst.size();
    };
    for (auto& l : layers) {
      take(l.W.data());
      take(l.W_out.data());
      take(l.b);
      take(l.b_out);
    }
  }
};

/// Random MLP with Gaussian weights of variance 1/fan_in. `inner_widths`
/// defaults to d_{l+1} for each layer.
inline MLPSpec random_mlp(const std::vector<std::size_t>& dims, Activation act, SeededRng& rng,
                          std::vector<std::size_t> inner_widths = {}, double bias_scale = 0.5) {
  if (dims.size() < 2) throw StructuralError("MLP needs at least two layer dims");
  if (inner_widths.empty()) inner_widths.assign(dims.begin() + 1, dims.end());
  if (inner_widths.size() + 1 != dims.size()) throw StructuralError("one inner width per layer required");
  MLPSpec spec;
  spec.layer_dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    MLPLayer ly;
    const std::size_t inner = inner_widths[l];
    ly.W = Matrix(inner, dims[l]);
    ly.W_out = Matrix(dims[l + 1], inner);
    ly.b = Vector(inner);
    ly.b_out = Vector(dims[l + 1]);
    const double sw = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    const double so = 1.0 / std::sqrt(static_cast<double>(inner));
    for (double& w : ly.W.data()) w = rng.normal(0.0, sw);
    for (double& w : ly.W_out.data()) w = rng.normal(0.0, so);
    for (double& v : ly.b) v = rng.normal(0.0, bias_scale);
    for (double& v : ly.b_out) v = rng.normal(0.0, bias_scale);
    ly.activation = act;
    spec.layers.push_back(std::move(ly));
  }
  return spec;
}

struct MLPTrace {
  std::vector<Vector> hidden;  // h_0 .. h_L
  std::vector<Vector> pre;     // W_l h_l + b_l for each layer
};

inline MLPTrace mlp_trace(const MLPSpec& spec, std::span<const double> x) {
  spec.validate();
  if (x.size() != spec.input_dim()) {
    throw StructuralError("layer 0: input has dimension " + std::to_string(x.size()) +
                          " but d_0 = " + std::to_string(spec.input_dim()));
  }
  MLPTrace t;
  t.hidden.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& ly = spec.layers[l];
    Vector z = ly.pre_activation(t.hidden.back());
    Vector a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = ly.activation(z[i]);
    Vector h = ly.W_out * a;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += ly.b_out[i];
    t.pre.push_back(std::move(z));
    t.hidden.push_back(std::move(h));
  }
  return t;
}

inline Vector mlp_forward(const MLPSpec& spec, std::span<const double> x) {
  return mlp_trace(spec, x).hidden.back();
}

struct MLPGradients {
  Vector input;       // d(c . Phi)/dx
  Vector parameters;  // d(c . Phi)/dtheta, in MLPSpec::parameters() order
};

/// Reverse accumulation of the cotangent `c` through the network.
inline MLPGradients mlp_vjp(const MLPSpec& spec, std::span<const double> x,
                            std::span<const double> cotangent, bool want_parameters = true) {
  const MLPTrace t = mlp_trace(spec, x);
  if (cotangent.size() != spec.output_dim()) throw DimensionError("mlp_vjp: cotangent has wrong length");
  MLPGradients g;
  if (want_parameters) g.parameters.assign(spec.parameter_count(), 0.0);
  std::vector<std::size_t> offsets(spec.layers.size());
  {
    std::size_t k = 0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
      offsets[l] = k;
      k += spec.layers[l].parameter_count();
    }
  }
  Vector c(cotangent.begin(), cotangent.end());
  for (std::size_t l = spec.layers.size(); l-- > 0;) {
    const auto& ly = spec.layers[l];
    const Vector& z = t.pre[l];
    Vector act(z.size()), dact(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      act[i] = ly.activation(z[i]);
      dact[i] = ly.activation.derivative(z[i]);
    }
    Vector a = ly.W_out.transpose_times(c);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= dact[i];
    if (want_parameters) {
      double* p = g.parameters.data() + offsets[l];
      const Vector& h = t.hidden[l];
      for (std::size_t r = 0; r < ly.W.rows(); ++r)
        for (std::size_t col = 0; col < ly.W.cols(); ++col) *p++ = a[r] * h[col];
      for (std::size_t r = 0; r < ly.W_out.rows(); ++r)
        for (std::size_t col = 0; col < ly.W_out.cols(); ++col) *p++ = c[r] * act[col];
      for (double v : a) *p++ = v;
      for (double v : c) *p++ = v;
    }
    c = ly.W.transpose_times(a);
  }
  g.input = std::move(c);
  return g;
}

/// Residual network: every layer dim equal, h_{l+1} = h_l + f_l(h_l).
inline Vector resnet_forward(const MLPSpec& spec, std::span<const double> x) {
  spec.validate();
  for (std::size_t l = 1; l < spec.layer_dims.size(); ++l) {
    if (spec.layer_dims[l] != spec.layer_dims[0]) {
      throw StructuralError("ResNet layer " + std::to_string(l) + " has width " +
                            std::to_string(spec.layer_dims[l]) + " != " +
                            std::to_string(spec.layer_dims[0]));
    }
  }
  if (x.size() != spec.input_dim()) throw StructuralError("layer 0: input dimension mismatch");
  Vector h(x.begin(), x.end());
  for (const auto& ly : spec.layers) {
    const Vector f = ly.apply(h);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += f[i];
  }
  return h;
}

/// One DenseResNet update. `f` receives the `arity` most recent layers,
/// newest first: (h_l, h_{l-1}, ..., h_{l-arity+1}).
struct DenseLayer {
  std::size_t arity = 1;
  std::function<Vector(std::span<const Vector>)> f;
};

inline Vector dense_resnet_forward(const std::vector<DenseLayer>& layers, std::span<const double> x) {
  std::vector<Vector> history;  // newest first
  history.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& ly = layers[l];
    if (ly.arity == 0 || ly.arity > l + 1) {
      throw StructuralError("dense layer " + std::to_string(l) + " reads " + std::to_string(ly.arity) +
                            " previous layers but only " + std::to_string(l + 1) + " exist");
    }
    const Vector update = ly.f(std::span<const Vector>(history.data(), ly.arity));
    const Vector& h = history.front();
    if (update.size() != h.size()) {
      throw StructuralError("dense layer " + std::to_string(l) + " returns width " +
                            std::to_string(update.size()) + " != " + std::to_string(h.size()));
    }
    Vector next = h;
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += update[i];
    history.insert(history.begin(), std::move(next));
  }
  return history.front();
}

/// Dense layers reading only h_l, reproducing resnet_forward.
inline std::vector<DenseLayer> dense_layers_from_resnet(const MLPSpec& spec) {
  std::vector<DenseLayer> out;
  for (const auto& ly : spec.layers) {
    out.push_back({1, [ly](std::span<const Vector> hs) { return ly.apply(hs[0]); }});
  }
  return out;
}

}  // namespace dynlab::networks
