#pragma once

#include <string>
#include <vector>

#include "dynlab/morse/critical.hpp"
#include "dynlab/networks/classify.hpp"
#include "dynlab/networks/mlp.hpp"
#include "dynlab/networks/neural_ode.hpp"
#include "dynlab/networks/vector_fields.hpp"

namespace dynlab::morse {

using networks::ArchClass;

inline ScalarField mlp_field(const networks::MLPSpec& spec) {
  spec.validate();
  if (spec.layer_dims.back() != 1) throw UnsupportedError("classification needs scalar output (q = 1)");
  ScalarField f;
  f.dim = spec.layer_dims.front();
  f.value = [spec](const Vector& x) { return networks::mlp_forward(spec, x)[0]; };
  f.gradient = [spec](const Vector& x) { return networks::mlp_vjp(spec, x, Vector{1.0}, false).input; };
  return f;
}

inline ScalarField node_field(const networks::NeuralODESpec& spec) {
  spec.validate();
  if (spec.lift.q() != 1) throw UnsupportedError("classification needs scalar output (q = 1)");
  ScalarField f;
  f.dim = spec.lift.d();
  f.value = [spec](const Vector& x) { return networks::node_forward(spec, x)[0]; };
  return f;
}

struct RowSample {
  std::size_t index = 0;
  Verdict verdict = Verdict::Inconclusive;
  std::size_t critical_points = 0;
  Vector parameters;
};

/// Outcome of sampling one row of the classification table.
struct RowSummary {
  ArchClass row = ArchClass::NonAugmented;
  std::vector<RowSample> samples;
  /// Samples whose verdict the row does not allow, with their weights.
  std::vector<RowSample> violations;

  std::size_t count(Verdict v) const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.verdict == v ? 1 : 0;
    return n;
  }
  bool passed() const { return violations.empty(); }
};

inline bool row_allows(ArchClass row, Verdict v) {
  switch (row) {
    case ArchClass::NonAugmented: return v == Verdict::C1;
    case ArchClass::Augmented: return v == Verdict::C1 || v == Verdict::C2;
    case ArchClass::Degenerate: return v == Verdict::C1 || v == Verdict::C3;
    case ArchClass::Bottleneck: return true;
  }
  return false;
}

struct RowSearch {
  double box_half_width = 2.0;
  SearchOptions options;
};

/// Samples `trials` Gaussian MLPs with the given dims and checks each verdict
/// against the row claim.
inline RowSummary verify_mlp_row(const std::vector<std::size_t>& dims, networks::Activation act, ArchClass row,
                                 SeededRng& rng, std::size_t trials, const RowSearch& search = {}) {
  if (dims.back() != 1) throw UnsupportedError("classification needs scalar output (q = 1)");
  if (row == ArchClass::Degenerate) throw InputError("the degenerate row applies to neural ODEs only");
  if (networks::classify_fnn(dims) != row) {
    throw InputError("layer dims are " + networks::to_string(networks::classify_fnn(dims)) + ", not " +
                     networks::to_string(row));
  }
  RowSummary out;
  out.row = row;
  const Box box = Box::cube(dims.front(), search.box_half_width);
  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng draw = rng.split(t);
    const auto spec = networks::random_mlp(dims, act, draw);
    SeededRng search_rng = rng.split(t + trials);
    const auto rep = classify_function(mlp_field(spec), box, search_rng, search.options);
    RowSample s{t, rep.verdict, rep.critical_points.size(), spec.parameters()};
    if (!row_allows(row, s.verdict)) out.violations.push_back(s);
    out.samples.push_back(std::move(s));
  }
  return out;
}

struct NodeRowShape {
  std::size_t d = 2;
  std::size_t m = 2;
  double T = 1.0;
  std::size_t steps = 20;
};

/// Samples scalar neural ODEs with a seeded tanh-net field. The degenerate
/// row zeroes the output weights W_out.
inline RowSummary verify_node_row(const NodeRowShape& shape, ArchClass row, SeededRng& rng, std::size_t trials,
                                  const RowSearch& search = {}) {
  if (row == ArchClass::Bottleneck) throw InputError("neural ODEs have no bottleneck row");
  if (row == ArchClass::Augmented && !(shape.m > shape.d)) throw InputError("augmented row needs m > d");
  if (row == ArchClass::NonAugmented && shape.m > shape.d) throw InputError("non-augmented row needs m <= d");
  RowSummary out;
  out.row = row;
  const Box box = Box::cube(shape.d, search.box_half_width);
  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng draw = rng.split(t);
    networks::AffineLift lift{Matrix(shape.m, shape.d), Vector(shape.m), Matrix(1, shape.m), Vector{0.0}};
    const double sw = 1.0 / std::sqrt(static_cast<double>(shape.d));
    const double so = 1.0 / std::sqrt(static_cast<double>(shape.m));
    for (double& v : lift.W.data()) v = draw.normal(0.0, sw);
    for (double& v : lift.b) v = draw.normal(0.0, 0.5);
    for (double& v : lift.W_out.data()) v = row == ArchClass::Degenerate ? 0.0 : draw.normal(0.0, so);
    const auto field_seed = draw.next();
    networks::NeuralODESpec spec{lift, networks::make_vector_field("tanh-net", shape.m, {{"seed", field_seed}}),
                                 shape.T, shape.steps};
    SeededRng search_rng = rng.split(t + trials);
    const auto rep = classify_function(node_field(spec), box, search_rng, search.options);
    Vector params = lift.W.data();
    params.insert(params.end(), lift.W_out.data().begin(), lift.W_out.data().end());
    RowSample s{t, rep.verdict, rep.critical_points.size(), std::move(params)};
    if (!row_allows(row, s.verdict)) out.violations.push_back(s);
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace dynlab::morse
