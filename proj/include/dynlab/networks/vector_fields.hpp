#pragma once

// Named parametric vector fields, so that neural ODE/DDE specs can be
// serialized by id.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynlab/networks/neural_ode.hpp"
#include "dynlab/numerics/rng.hpp"

namespace dynlab::networks {

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InputError(what + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InputError(what + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    j.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return j;
}

/// Registry ids: zero, linear, decay, tanh-net.
///
///  zero      f = 0
///  linear    f = A h + c       (A defaults to the identity, c to 0)
///  decay     f = -rate h       (rate defaults to 1)
///  tanh-net  f = tanh(A h + c) (A, c default to a seeded N(0, 1/m) draw)
inline OdeField make_vector_field(const std::string& id, std::size_t m,
                                  const nlohmann::json& params = nlohmann::json::object()) {
  auto vec_param = [&](const char* key, Vector fallback) {
    if (!params.contains(key)) return fallback;
    Vector v = params.at(key).get<Vector>();
    if (v.size() != m) throw InputError(std::string("vector field parameter '") + key + "' has wrong length");
    return v;
  };
  auto mat_param = [&](const char* key, Matrix fallback) {
    if (!params.contains(key)) return fallback;
    Matrix a = matrix_from_json(params.at(key), key);
    if (a.rows() != m || a.cols() != m) throw InputError(std::string("vector field parameter '") + key + "' must be m x m");
    return a;
  };

  if (id == "zero") {
    return [m](double, const Vector&) { return Vector(m, 0.0); };
  }
  if (id == "linear") {
    const Matrix A = mat_param("A", Matrix::identity(m));
    const Vector c = vec_param("c", Vector(m, 0.0));
    return [A, c](double, const Vector& h) {
      Vector out = A * h;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
      return out;
    };
  }
  if (id == "decay") {
    const double rate = params.value("rate", 1.0);
    return [rate](double, const Vector& h) { return -rate * h; };
  }
  if (id == "tanh-net") {
    SeededRng rng(params.value("seed", std::uint64_t{1}));
    Matrix A0(m, m);
    Vector c0(m);
    for (double& a : A0.data()) a = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
    for (double& c : c0) c = rng.normal(0.0, 0.5);
    const Matrix A = mat_param("A", A0);
    const Vector c = vec_param("c", c0);
    return [A, c](double, const Vector& h) {
      Vector out = A * h;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i] + c[i]);
      return out;
    };
  }
  throw InputError("unknown vector field id '" + id + "'");
}

inline std::vector<std::string> vector_field_ids() { return {"decay", "linear", "tanh-net", "zero"}; }

/// DDE field F(t, h_t) = f(t, h_t(0)) + g(t, h_t(-tau)), g optional.
inline DdeField make_delay_field(const std::string& id, std::size_t m, const nlohmann::json& params,
                                 const std::string& delay_id = "", const nlohmann::json& delay_params = {}) {
  OdeField f = make_vector_field(id, m, params);
  if (delay_id.empty()) return instantaneous(std::move(f));
  OdeField g = make_vector_field(delay_id, m, delay_params.is_null() ? nlohmann::json::object() : delay_params);
  return [f = std::move(f), g = std::move(g)](double t, const HistorySegment& h) {
    Vector out = f(t, h.now());
    const Vector lag = g(t, h(-h.tau()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += lag[i];
    return out;
  };
}

}  // namespace dynlab::networks
