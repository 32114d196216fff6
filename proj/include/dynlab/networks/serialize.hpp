#pragma once

// JSON schema for network specs.
//
// Feed-forward ("architecture": "mlp" | "resnet"):
//   { "architecture": "mlp",
//     "layer_dims": [d0, ..., dL],
//     "weights":    [[W_0, W_out_0], ...],       // nested row arrays
//     "biases":     [[b_0, b_out_0], ...],
//     "activation": "tanh" | ["tanh", "softplus", ...] }
//
// Continuous depth ("architecture": "node" | "ndde"):
//   { "architecture": "ndde",
//     "layer_dims": [d, m, q],
//     "weights": [W, W_out], "biases": [b, b_out],
//     "vector_field_id": "tanh-net", "vector_field_params": {...},
//     "delay_field_id": "decay", "delay_field_params": {...},   // ndde only, optional
//     "T": 1.0, "tau": 0.5, "steps": 100 }

#include <string>

#include <json.hpp>

#include "dynlab/networks/mlp.hpp"
#include "dynlab/networks/vector_fields.hpp"

namespace dynlab::networks {

inline nlohmann::json mlp_to_json(const MLPSpec& spec, const std::string& architecture = "mlp") {
  spec.validate();
  nlohmann::json j;
  j["architecture"] = architecture;
  j["layer_dims"] = spec.layer_dims;
  j["weights"] = nlohmann::json::array();
  j["biases"] = nlohmann::json::array();
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& l : spec.layers) {
    j["weights"].push_back({matrix_to_json(l.W), matrix_to_json(l.W_out)});
    j["biases"].push_back({l.b, l.b_out});
    acts.push_back(l.activation.name());
  }
  j["activation"] = acts;
  return j;
}

inline MLPSpec mlp_from_json(const nlohmann::json& j) {
  try {
    MLPSpec spec;
    spec.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() + 1 != spec.layer_dims.size() || biases.size() != weights.size()) {
      throw StructuralError("weights/biases must have one entry per layer");
    }
    const auto& act = j.at("activation");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      MLPLayer ly;
      ly.W = matrix_from_json(weights[l].at(0), "weights[" + std::to_string(l) + "][0]");
      ly.W_out = matrix_from_json(weights[l].at(1), "weights[" + std::to_string(l) + "][1]");
      ly.b = biases[l].at(0).get<Vector>();
      ly.b_out = biases[l].at(1).get<Vector>();
      ly.activation = Activation::parse(act.is_array() ? act.at(l).get<std::string>() : act.get<std::string>());
      spec.layers.push_back(std::move(ly));
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed MLP spec: ") + e.what());
  }
}

/// Serializable description of a neural ODE or DDE.
struct ContinuousNetworkDoc {
  bool delay = false;
  AffineLift lift;
  std::string vector_field_id = "zero";
  nlohmann::json vector_field_params = nlohmann::json::object();
  std::string delay_field_id;
  nlohmann::json delay_field_params = nlohmann::json::object();
  double T = 1.0;
  double tau = 0.0;
  std::size_t steps = 100;

  NeuralODESpec ode() const {
    return {lift, make_vector_field(vector_field_id, lift.m(), vector_field_params), T, steps};
  }
  NeuralDDESpec dde() const {
    return {lift, make_delay_field(vector_field_id, lift.m(), vector_field_params, delay_field_id, delay_field_params),
            T, tau, steps};
  }
};

inline nlohmann::json continuous_to_json(const ContinuousNetworkDoc& doc) {
  doc.lift.validate();
  nlohmann::json j;
  j["architecture"] = doc.delay ? "ndde" : "node";
  j["layer_dims"] = {doc.lift.d(), doc.lift.m(), doc.lift.q()};
  j["weights"] = {matrix_to_json(doc.lift.W), matrix_to_json(doc.lift.W_out)};
  j["biases"] = {doc.lift.b, doc.lift.b_out};
  j["vector_field_id"] = doc.vector_field_id;
  j["vector_field_params"] = doc.vector_field_params;
  if (doc.delay) {
    j["tau"] = doc.tau;
    if (!doc.delay_field_id.empty()) {
      j["delay_field_id"] = doc.delay_field_id;
      j["delay_field_params"] = doc.delay_field_params;
    }
  }
  j["T"] = doc.T;
  j["steps"] = doc.steps;
  return j;
}

inline ContinuousNetworkDoc continuous_from_json(const nlohmann::json& j) {
  try {
    ContinuousNetworkDoc doc;
    const std::string arch = j.value("architecture", "node");
    if (arch != "node" && arch != "ndde") throw InputError("architecture must be 'node' or 'ndde', got '" + arch + "'");
    doc.delay = arch == "ndde";
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw StructuralError("continuous networks need layer_dims [d, m, q]");
    doc.lift.W = matrix_from_json(j.at("weights").at(0), "weights[0]");
    doc.lift.W_out = matrix_from_json(j.at("weights").at(1), "weights[1]");
    doc.lift.b = j.at("biases").at(0).get<Vector>();
    doc.lift.b_out = j.at("biases").at(1).get<Vector>();
    if (doc.lift.d() != dims[0] || doc.lift.m() != dims[1] || doc.lift.q() != dims[2]) {
      throw StructuralError("weights do not match layer_dims [d, m, q]");
    }
    doc.lift.validate();
    doc.vector_field_id = j.at("vector_field_id").get<std::string>();
    doc.vector_field_params = j.value("vector_field_params", nlohmann::json::object());
    doc.delay_field_id = j.value("delay_field_id", std::string());
    doc.delay_field_params = j.value("delay_field_params", nlohmann::json::object());
    doc.T = j.at("T").get<double>();
    doc.tau = j.value("tau", 0.0);
    doc.steps = j.at("steps").get<std::size_t>();
    // Resolve the field id now so unknown ids fail at load time.
    (void)make_vector_field(doc.vector_field_id, doc.lift.m(), doc.vector_field_params);
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed continuous network spec: ") + e.what());
  }
}

}  // namespace dynlab::networks
