#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynlab/cli/artifacts.hpp"
#include "dynlab/discrete_ips.hpp"
#include "dynlab/meanfield.hpp"
#include "dynlab/morse.hpp"
#include "dynlab/networks.hpp"
#include "dynlab/numerics.hpp"
#include "dynlab/training.hpp"

namespace dynlab::cli {

using io::Config;

// ------------------------------------------------------------ registries --

inline std::vector<std::string> loss_ids() { return {"prod2", "quadratic", "two-point-scalar"}; }
inline std::vector<std::string> graphon_ids() { return {"block", "constant", "ranked"}; }
inline std::vector<std::string> ips_model_ids() {
  return {"cucker_smale", "desai_zwanzig", "hegselmann_krause", "hopfield_cts", "kuramoto", "transformer"};
}
inline std::vector<std::string> probe_ids() { return {"circle", "cubic", "quadratic", "quartic", "saddle", "tanh"}; }

struct LossSetup {
  training::LossModel model;
  Vector default_start;
  Vector default_minimum;
};

/// Loss selected by model.id with its parameters.
inline LossSetup make_loss(Config& cfg, const std::string& fallback) {
  const std::string id = cfg.get_choice("model.id", fallback, loss_ids());
  if (id == "prod2") {
    const std::string kind = cfg.get_choice("model.loss", "squared", {"half_squared", "squared"});
    return {training::prod2_model(kind == "squared" ? training::LossKind::Squared : training::LossKind::HalfSquared),
            Vector{2.5, 0.41}, Vector{1.0, 1.0}};
  }
  if (id == "quadratic") {
    const Matrix Q = cfg.get_matrix("model.Q", Matrix{{4.0}});
    if (!Q.square()) throw ConfigError("model.Q", "must be square");
    return {training::quadratic_model(Q), Vector(Q.rows(), 1.0), Vector(Q.rows(), 0.0)};
  }
  return {training::two_point_scalar_model(), Vector{0.5}, Vector{0.0}};
}

inline Vector get_point(Config& cfg, const std::string& key, const Vector& fallback, std::size_t dim) {
  Vector v = cfg.get_reals(key, fallback);
  if (v.size() != dim) {
    throw ConfigError(key, "has " + std::to_string(v.size()) + " entries, the model needs " + std::to_string(dim));
  }
  return v;
}

inline meanfield::Graphon make_graphon(Config& cfg) {
  const std::string id = cfg.get_choice("graphon.id", "constant", graphon_ids());
  if (id == "constant") return meanfield::constant_graphon(cfg.get_double("graphon.c", 1.0));
  if (id == "ranked") return meanfield::ranked_graphon();
  const double p_in = cfg.get_double("graphon.p_in", 0.8);
  const double p_out = cfg.get_double("graphon.p_out", 0.2);
  return meanfield::block_graphon(p_in, p_out, cfg.get_double("graphon.cut", 0.5));
}

inline Matrix random_symmetric(std::size_t M, SeededRng& rng, double scale) {
  Matrix A(M, M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < i; ++j) A(i, j) = A(j, i) = scale * rng.normal();
  return A;
}

struct IPSSetup {
  meanfield::IPSModel model;
  std::size_t M = 0;
};

inline IPSSetup make_ips_model(Config& cfg, std::size_t M, SeededRng& rng) {
  const std::string id = cfg.get_choice("model.id", "kuramoto", ips_model_ids());
  const auto K = [&] { return cfg.get_double("model.K", 1.0); };
  if (id == "kuramoto") {
    const double k = K();
    Vector omega = cfg.get_reals("model.omega", {0.0});
    const double sd = cfg.get_double("model.omega_sd", 0.0);
    if (sd > 0.0) {
      const double mean = omega.size() == 1 ? omega[0] : 0.0;
      omega.assign(M, 0.0);
      for (double& w : omega) w = rng.normal(mean, sd);
    }
    return {meanfield::kuramoto(k, omega), M};
  }
  if (id == "desai_zwanzig") {
    const double k = K();
    const std::string pot = cfg.get_choice("model.potential", "double-well", {"double-well", "zero"});
    std::function<double(double)> dv = meanfield::double_well_derivative;
    if (pot == "zero") dv = [](double) { return 0.0; };
    return {meanfield::desai_zwanzig(dv, k), M};
  }
  if (id == "hegselmann_krause") {
    const double k = K();
    return {meanfield::hegselmann_krause(k, cfg.get_double("model.c", 0.5), cfg.get_double("model.d", 0.5)), M};
  }
  if (id == "cucker_smale") {
    const double k = K();
    return {meanfield::cucker_smale(k, cfg.get_double("model.alpha", 1.0), cfg.get_size("model.space_dim", 1)), M};
  }
  if (id == "hopfield_cts") {
    const double alpha = cfg.get_double("model.alpha", 1.0);
    Matrix A = random_symmetric(M, rng, 1.0 / std::sqrt(static_cast<double>(M)));
    A = cfg.get_matrix("model.A", A);
    const Vector b = cfg.get_reals("model.b", {0.0});
    return {meanfield::hopfield_cts(alpha, b, A), M};
  }
  const std::size_t d = cfg.get_size("model.dim", 2);
  const Matrix I = Matrix::identity(d);
  return {meanfield::transformer_ode(cfg.get_matrix("model.M1", I), cfg.get_matrix("model.M2", I),
                                     cfg.get_matrix("model.M3", I)),
          M};
}

/// Graph selected by graph.kind; "default" keeps the model's own graph.
inline meanfield::GraphSpec make_graph(Config& cfg, const meanfield::IPSModel& model, std::size_t M) {
  const std::string kind = cfg.get_choice("graph.kind", "default", {"all_to_all", "default", "explicit", "graphon"});
  if (kind == "default") return *model.default_graph;
  if (kind == "all_to_all") return meanfield::GraphSpec::all_to_all(cfg.get_double("graph.K", 1.0));
  if (kind == "explicit") {
    const Matrix a = cfg.get_matrix("graph.matrix", Matrix(M, M, 1.0 / static_cast<double>(M)));
    return meanfield::GraphSpec::explicit_matrix(a);
  }
  const auto g = make_graphon(cfg);
  return meanfield::GraphSpec::graphon(g, cfg.get_size("graph.order", 4));
}

inline nlohmann::json field_params(Config& cfg, const std::string& prefix, const std::string& id, std::size_t m,
                                   std::uint64_t seed) {
  nlohmann::json p = nlohmann::json::object();
  if (id == "decay") p["rate"] = cfg.get_double(prefix + ".rate", 1.0);
  if (id == "tanh-net") p["seed"] = cfg.get_seed(prefix + ".seed", seed);
  if (id == "linear" || id == "tanh-net") {
    if (cfg.has(prefix + ".A")) p["A"] = networks::matrix_to_json(cfg.get_matrix(prefix + ".A", Matrix::identity(m)));
    if (cfg.has(prefix + ".c")) p["c"] = cfg.get_reals(prefix + ".c", Vector(m, 0.0));
  }
  return p;
}

struct FrequencyAtoms {
  Vector omegas;
  Vector zetas;
};

inline FrequencyAtoms get_frequencies(Config& cfg) {
  const std::string kind = cfg.get_choice("omega.kind", "single", {"gauss-hermite", "single"});
  if (kind == "single") return {{cfg.get_double("omega.value", 0.0)}, {1.0}};
  const auto q = gauss_hermite_normal(cfg.get_size("omega.order", 5), cfg.get_double("omega.mean", 0.0),
                                      cfg.get_double("omega.sd", 1.0));
  return {q.nodes, q.weights};
}

inline discrete_ips::SpinNetwork get_network(Config& cfg) {
  discrete_ips::SpinNetwork net;
  net.A = cfg.get_matrix("network.A", Matrix{{0.0, 2.0}, {2.0, 0.0}});
  net.b = cfg.get_reals("network.b", Vector(net.A.rows(), 0.0));
  try {
    net.validate();
  } catch (const Error& e) {
    throw ConfigError("network.A", e.what());
  }
  return net;
}

inline discrete_ips::SignConvention get_convention(Config& cfg) {
  return cfg.get_choice("network.convention", "balanced", {"balanced", "literal"}) == "balanced"
             ? discrete_ips::SignConvention::Balanced
             : discrete_ips::SignConvention::Literal;
}

// ----------------------------------------------------------- experiments --

inline Job plan_edge_of_stability(Config& cfg, std::uint64_t) {
  auto loss = make_loss(cfg, "prod2");
  const Vector theta0 = get_point(cfg, "theta0", loss.default_start, loss.model.parameter_dim());
  training::GDConfig gd;
  gd.eta = cfg.get_double("gd.eta", 0.2);
  gd.max_steps = cfg.get_size("gd.steps", 1000);
  const std::size_t stride = cfg.get_size("gd.stride", 1);
  gd.validate();
  return [=](Artifacts& out) {
    const auto tr = training::edge_of_stability_trace(loss.model, theta0, gd, stride);
    const auto table = tr.table();
    out.csv("eos.csv", table);
    out.plot("plot_sharpness.svg", table, "step", {"sharpness", "threshold"}, "Sharpness against 2/eta");
    Summary s;
    s.add("diverged", tr.diverged).add("final_residual", tr.final_residual);
    s.add("terminal_sharpness", tr.terminal_sharpness()).add("threshold", 2.0 / gd.eta);
    for (std::size_t k = 0; k < tr.final_theta.size(); ++k) s.add("theta" + std::to_string(k + 1), tr.final_theta[k]);
    out.csv("summary.csv", s.table());
    return tr.diverged ? kExitDivergence : kExitOk;
  };
}

inline Job plan_lyapunov(Config& cfg, std::uint64_t seed) {
  auto loss = make_loss(cfg, "two-point-scalar");
  const Vector theta_star = get_point(cfg, "theta_star", loss.default_minimum, loss.model.parameter_dim());
  const double eta = cfg.get_double("gd.eta", 0.4);
  const std::size_t B = cfg.get_size("sgd.batch_size", 1);
  training::LyapunovOptions opt;
  opt.n_steps = cfg.get_size("lyapunov.steps", 100000);
  opt.replicates = cfg.get_size("lyapunov.replicates", 20);
  opt.burn_in = cfg.get_size("lyapunov.burn_in", 1000);
  opt.checkpoints = cfg.get_size("lyapunov.checkpoints", 20);
  if (!(eta > 0.0)) throw ConfigError("gd.eta", "must be positive");
  if (B < 1 || B > loss.model.sample_count()) throw ConfigError("sgd.batch_size", "must satisfy 1 <= B <= N");
  return [=](Artifacts& out) {
    SeededRng rng(seed);
    const auto jac = training::batch_normal_jacobians(loss.model, theta_star, eta, B, rng);
    const Vector probs(jac.matrices.size(), 1.0 / static_cast<double>(jac.matrices.size()));
    const auto est = training::lyapunov_exponent(jac.matrices, probs, opt, rng.split(1));
    const auto table = est.table();
    out.csv("lyapunov.csv", table);
    out.plot("plot_lyapunov.svg", table, "n", {"lambda_estimate"}, "Running Lyapunov estimate");
    const auto reg = training::regularity_check(jac.matrices);
    Summary s;
    s.add("lambda", est.lambda).add("standard_error", est.standard_error).add("minus_infinity", est.minus_infinity);
    s.add("batches", jac.matrices.size()).add("enumerated", jac.enumerated);
    s.add("regular", reg.regular()).add("irreducibility", reg.irreducibility_label);
    s.add("verdict", est.lambda < 0.0 ? "stable" : "unstable");
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

inline Job plan_milnor_probe(Config& cfg, std::uint64_t seed) {
  auto loss = make_loss(cfg, "two-point-scalar");
  const Vector theta_star = get_point(cfg, "theta_star", loss.default_minimum, loss.model.parameter_dim());
  training::MilnorOptions opt;
  opt.eta = cfg.get_double("gd.eta", 0.4);
  const std::size_t B = cfg.get_size("sgd.batch_size", 1);
  if (B > 0) opt.batch_size = B;
  opt.radius = cfg.get_double("milnor.radius", 0.1);
  opt.samples = cfg.get_size("milnor.samples", 500);
  opt.horizon = cfg.get_size("milnor.horizon", 200);
  opt.tol = cfg.get_double("milnor.tol", 1e-6);
  opt.mode = cfg.get_choice("milnor.mode", "isolated", {"isolated", "manifold"}) == "isolated"
                 ? training::ProbeMode::IsolatedMinimum
                 : training::ProbeMode::Manifold;
  opt.neighborhood = cfg.get_double("milnor.neighborhood", 1.0);
  if (!(opt.eta > 0.0)) throw ConfigError("gd.eta", "must be positive");
  if (B >= loss.model.sample_count()) throw ConfigError("sgd.batch_size", "must be below the sample count (0 = full batch)");
  return [=](Artifacts& out) {
    const auto res = training::milnor_probe(loss.model, theta_star, opt, SeededRng(seed));
    out.csv("milnor.csv", res.table());
    Summary s;
    s.add("fraction", res.fraction()).add("samples", opt.samples).add("radius", opt.radius);
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

inline morse::ScalarField probe_field(const std::string& id) {
  using morse::ScalarField;
  if (id == "quadratic") return {1, [](const Vector& x) { return x[0] * x[0]; }, {}};
  if (id == "cubic") return {1, [](const Vector& x) { return x[0] * x[0] * x[0]; }, {}};
  if (id == "quartic") return {1, [](const Vector& x) { return std::pow(x[0], 4); }, {}};
  if (id == "tanh") return {1, [](const Vector& x) { return std::tanh(x[0]); }, {}};
  if (id == "circle") return {2, [](const Vector& x) { return x[0] * x[0] + x[1] * x[1]; }, {}};
  return {2, [](const Vector& x) { return x[0] * x[1]; }, {}};
}

inline Job plan_morse_classify(Config& cfg, std::uint64_t seed) {
  const std::string kind = cfg.get_choice("field.kind", "mlp", {"mlp", "node", "probe"});
  morse::SearchOptions opt;
  opt.starts = cfg.get_size("search.starts", opt.starts);
  opt.grad_tol = cfg.get_double("search.grad_tol", opt.grad_tol);
  opt.degen_tol = cfg.get_double("search.degen_tol", opt.degen_tol);
  const double hw = cfg.get_double("box.half_width", 2.0);
  if (!(hw > 0.0)) throw ConfigError("box.half_width", "must be positive");
  SeededRng rng(seed);
  morse::ScalarField field;
  std::string label;
  if (kind == "probe") {
    label = cfg.get_choice("probe.id", "circle", probe_ids());
    field = probe_field(label);
  } else if (kind == "mlp") {
    const auto dims = cfg.get_sizes("mlp.dims", {3, 2, 1});
    const auto act = cfg.get_string("mlp.activation", "tanh");
    if (dims.size() < 2 || dims.back() != 1) throw ConfigError("mlp.dims", "needs at least two layers and output 1");
    networks::Activation a;
    try {
      a = networks::Activation::parse(act);
    } catch (const InputError& e) {
      throw ConfigError("mlp.activation", e.what());
    }
    const auto spec = networks::random_mlp(dims, a, rng);
    field = morse::mlp_field(spec);
    label = networks::to_string(networks::classify_fnn(dims));
  } else {
    const std::size_t d = cfg.get_size("node.d", 2), m = cfg.get_size("node.m", 2);
    const std::string fid = cfg.get_choice("node.field", "tanh-net", networks::vector_field_ids());
    const auto params = field_params(cfg, "node.field", fid, m, seed);
    networks::NeuralODESpec spec;
    spec.T = cfg.get_double("node.T", 1.0);
    spec.steps = cfg.get_size("node.steps", 20);
    spec.field = networks::make_vector_field(fid, m, params);
    spec.lift.W = Matrix(m, d);
    for (double& v : spec.lift.W.data()) v = rng.normal();
    spec.lift.b = Vector(m, 0.0);
    spec.lift.W_out = Matrix(1, m);
    for (double& v : spec.lift.W_out.data()) v = rng.normal();
    spec.lift.b_out = Vector{0.0};
    field = morse::node_field(spec);
    label = "node";
  }
  return [=](Artifacts& out) mutable {
    SeededRng search_rng = rng.split(7);
    const auto rep = morse::classify_function(field, morse::Box::cube(field.dim, hw), search_rng, opt);
    out.csv("critical_points.csv", morse::report_table(rep));
    Summary s;
    s.add("field", label).add("verdict", morse::to_string(rep.verdict)).add("critical_points", rep.critical_points.size());
    s.add("grid_min_gradient", rep.grid_min_gradient);
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

struct LiftedField {
  std::size_t m = 0;
  std::string id;
  nlohmann::json params;
  Vector input;
  double T = 1.0;
  std::size_t steps = 100;
};

inline LiftedField get_lifted_field(Config& cfg, const std::string& prefix, std::uint64_t seed) {
  LiftedField f;
  f.m = cfg.get_size(prefix + ".m", 2);
  if (f.m == 0) throw ConfigError(prefix + ".m", "must be >= 1");
  f.id = cfg.get_choice(prefix + ".field", "decay", networks::vector_field_ids());
  f.params = field_params(cfg, prefix + ".field", f.id, f.m, seed);
  f.input = get_point(cfg, prefix + ".input", Vector(f.m, 1.0), f.m);
  f.T = cfg.get_double(prefix + ".T", 1.0);
  f.steps = cfg.get_size(prefix + ".steps", 100);
  if (!(f.T > 0.0)) throw ConfigError(prefix + ".T", "must be positive");
  if (f.steps == 0) throw ConfigError(prefix + ".steps", "must be >= 1");
  return f;
}

inline std::vector<std::string> state_header(const std::string& first, std::size_t m) {
  std::vector<std::string> h{first};
  for (std::size_t i = 0; i < m; ++i) h.push_back("h" + std::to_string(i + 1));
  return h;
}

inline Job plan_node_forward(Config& cfg, std::uint64_t seed) {
  const auto f = get_lifted_field(cfg, "node", seed);
  return [=](Artifacts& out) {
    const auto field = networks::make_vector_field(f.id, f.m, f.params);
    io::CsvTable table(state_header("t", f.m));
    auto add = [&](double t, const Vector& h) {
      std::vector<std::string> row{io::format_real(t)};
      for (double v : h) row.push_back(io::format_real(v));
      table.add_row(std::move(row));
    };
    add(0.0, f.input);
    const double dt = f.T / static_cast<double>(f.steps);
    networks::rk4_integrate(field, f.input, 0.0, dt, f.steps, [&](std::size_t, double t, const Vector& h) { add(t, h); });
    out.csv("trajectory.csv", table);
    std::vector<std::string> ys;
    for (std::size_t i = 0; i < f.m; ++i) ys.push_back("h" + std::to_string(i + 1));
    out.plot("plot_trajectory.svg", table, "t", ys, "Neural ODE state");
    return kExitOk;
  };
}

inline Job plan_ndde_forward(Config& cfg, std::uint64_t seed) {
  const auto f = get_lifted_field(cfg, "ndde", seed);
  const double tau = cfg.get_double("ndde.tau", 1.0);
  const std::string delay_id = cfg.get_string("ndde.delay_field", "");
  nlohmann::json delay_params;
  if (!delay_id.empty()) {
    const auto ids = networks::vector_field_ids();
    if (std::find(ids.begin(), ids.end(), delay_id) == ids.end()) throw ConfigError("ndde.delay_field", "unknown vector field '" + delay_id + "'");
    delay_params = field_params(cfg, "ndde.delay", delay_id, f.m, seed);
  }
  const std::size_t points = cfg.get_size("ndde.record_points", 20);
  if (!(tau >= 0.0)) throw ConfigError("ndde.tau", "must be >= 0");
  if (points == 0) throw ConfigError("ndde.record_points", "must be >= 1");
  return [=](Artifacts& out) {
    io::CsvTable table(state_header("t", f.m));
    auto add = [&](double t, const Vector& h) {
      std::vector<std::string> row{io::format_real(t)};
      for (double v : h) row.push_back(io::format_real(v));
      table.add_row(std::move(row));
    };
    add(0.0, f.input);
    for (std::size_t k = 1; k <= points; ++k) {
      networks::NeuralDDESpec spec;
      spec.lift = networks::AffineLift::identity(f.m);
      spec.field = networks::make_delay_field(f.id, f.m, f.params, delay_id, delay_params);
      spec.T = f.T * static_cast<double>(k) / static_cast<double>(points);
      spec.tau = tau;
      spec.steps = std::max<std::size_t>(1, f.steps * k / points);
      add(spec.T, networks::ndde_state(spec, f.input));
    }
    out.csv("trajectory.csv", table);
    return kExitOk;
  };
}

inline Job plan_memory_report(Config& cfg, std::uint64_t) {
  const double K = cfg.get_double("memory.K", 1.0);
  const Vector taus = cfg.get_reals("memory.taus", {0.1, 0.25, 0.5, 1.0, 2.0, 5.0});
  std::optional<networks::EmbeddingTarget> target;
  if (cfg.get_bool("target.enabled", true)) {
    target = networks::EmbeddingTarget{cfg.get_double("target.lipschitz", 1.0), cfg.get_double("target.w", 1.0),
                                       cfg.get_double("target.w_out", 1.0)};
  }
  for (double t : taus)
    if (!(t >= 0.0)) throw ConfigError("memory.taus", "delays must be >= 0");
  if (!(K >= 0.0)) throw ConfigError("memory.K", "must be >= 0");
  return [=](Artifacts& out) {
    io::CsvTable table({"K", "tau", "capacity", "small_memory", "embed_capable"});
    for (double tau : taus) {
      const auto r = networks::memory_report(K, tau, target);
      table.add({K, tau, r.capacity(), r.small_memory(), r.embed_capable()});
    }
    out.csv("memory.csv", table);
    return kExitOk;
  };
}

inline Job plan_ips_simulate(Config& cfg, std::uint64_t seed) {
  const std::size_t M = cfg.get_size("ips.M", 50);
  if (M == 0) throw ConfigError("ips.M", "must be >= 1");
  SeededRng rng(seed);
  SeededRng param_rng = rng.split(1);
  auto setup = make_ips_model(cfg, M, param_rng);
  const auto graph = make_graph(cfg, setup.model, M);
  const double dt = cfg.get_double("ips.dt", 0.01);
  const double T = cfg.get_double("ips.T", 10.0);
  const std::size_t stride = cfg.get_size("ips.record_stride", 10);
  const double noise = cfg.get_double("ips.noise", 0.0);
  const std::string init = cfg.get_choice("ips.init", setup.model.circle ? "uniform" : "normal", {"normal", "uniform"});
  const double spread = cfg.get_double("ips.init_scale", setup.model.circle ? 2.0 * std::numbers::pi : 1.0);
  if (!(dt > 0.0)) throw ConfigError("ips.dt", "must be positive");
  if (!(T >= 0.0)) throw ConfigError("ips.T", "must be >= 0");
  if (stride == 0) throw ConfigError("ips.record_stride", "must be >= 1");
  if (!(noise >= 0.0)) throw ConfigError("ips.noise", "must be >= 0");
  try {
    setup.model.check_population(M);
    (void)graph.raw_weights(M);
  } catch (const DimensionError& e) {
    throw ConfigError("graph.matrix", e.what());
  }
  return [=](Artifacts& out) mutable {
    SeededRng init_rng = rng.split(2);
    Vector x0(M * setup.model.dim);
    for (double& v : x0) v = init == "uniform" ? init_rng.uniform(0.0, spread) : init_rng.normal(0.0, spread);
    meanfield::IPSTrajectory tr;
    if (noise > 0.0) {
      setup.model.noise = [noise](meanfield::ConstState, meanfield::ConstState, meanfield::OutState o) {
        for (double& v : o) v = noise;
      };
      setup.model.noise_self_only = true;
      meanfield::SDEOptions o;
      o.record_stride = stride;
      tr = meanfield::simulate_sde_ips(setup.model, graph, meanfield::GraphSpec::all_to_all(1.0), M, x0, dt, T,
                                       rng.split(3), o);
    } else {
      meanfield::IPSRunOptions o;
      o.record_stride = stride;
      tr = meanfield::simulate_ips(setup.model, graph, M, x0, dt, T, o);
    }
    std::vector<std::string> header{"t", "particle"};
    for (std::size_t k = 0; k < tr.dim; ++k) header.push_back("x" + std::to_string(k + 1));
    io::CsvTable states(header);
    for (std::size_t r = 0; r < tr.times.size(); ++r) {
      const Vector s = tr.wrapped(r);
      for (std::size_t i = 0; i < M; ++i) {
        std::vector<std::string> row{io::format_real(tr.times[r]), std::to_string(i)};
        for (std::size_t k = 0; k < tr.dim; ++k) row.push_back(io::format_real(s[i * tr.dim + k]));
        states.add_row(std::move(row));
      }
    }
    out.csv("states.csv", states);
    if (tr.circle && tr.dim == 1) {
      const auto op = tr.order_parameter_table();
      out.csv("order_parameter.csv", op);
      out.plot("plot_order_parameter.svg", op, "t", {"order_parameter"}, "Order parameter");
    }
    return kExitOk;
  };
}

inline Job plan_meanfield_converge(Config& cfg, std::uint64_t seed) {
  meanfield::ConvergenceConfig c;
  c.Ms = cfg.get_sizes("meanfield.Ms", c.Ms);
  c.seeds = cfg.get_size("meanfield.seeds", c.seeds);
  c.K = cfg.get_double("model.K", c.K);
  c.T = cfg.get_double("meanfield.T", c.T);
  c.particle_dt = cfg.get_double("meanfield.dt", c.particle_dt);
  c.sample_interval = cfg.get_double("meanfield.sample_interval", c.sample_interval);
  c.n_cells = cfg.get_size("grid.cells", c.n_cells);
  c.bump_center = cfg.get_double("bump.center", c.bump_center);
  c.bump_kappa = cfg.get_double("bump.kappa", c.bump_kappa);
  c.quantile_init = cfg.get_bool("meanfield.quantile_init", false);
  const auto freq = get_frequencies(cfg);
  c.omegas = freq.omegas;
  c.zetas = freq.zetas;
  c.seed = seed;
  if (c.n_cells < 2) throw ConfigError("grid.cells", "must be >= 2");
  return [=](Artifacts& out) {
    const auto study = meanfield::meanfield_convergence_study(c);
    const auto table = study.table();
    out.csv("convergence.csv", table);
    out.plot("plot_convergence.svg", table, "M", {"sup_w1"}, "sup_t W1 against M");
    Summary s;
    s.add("inversions", study.inversions()).add("vlasov_dt", study.vlasov_dt).add("grid_cells", study.n_cells);
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

inline Job plan_dobrushin(Config& cfg, std::uint64_t) {
  const double K = cfg.get_double("model.K", 1.0);
  const double T = cfg.get_double("vlasov.T", 2.0);
  const std::size_t n = cfg.get_size("grid.cells", 1024);
  const double c1 = cfg.get_double("bump1.center", 2.5);
  const double c2 = cfg.get_double("bump2.center", 3.5);
  const double kappa = cfg.get_double("bump.kappa", 2.0);
  const double L = cfg.get_double("dobrushin.L", std::abs(K));
  const double tol = cfg.get_double("dobrushin.tol", 0.05);
  const double dt_cfg = cfg.get_double("vlasov.dt", 0.0);
  const double interval = cfg.get_double("vlasov.record_interval", 0.05);
  const auto freq = get_frequencies(cfg);
  if (n < 2) throw ConfigError("grid.cells", "must be >= 2");
  return [=](Artifacts& out) {
    const auto a = meanfield::DensityGrid::from_function(meanfield::von_mises_bump(c1, kappa), n, freq.omegas, freq.zetas);
    const auto b = meanfield::DensityGrid::from_function(meanfield::von_mises_bump(c2, kappa), n, freq.omegas, freq.zetas);
    meanfield::VlasovOptions opt;
    opt.record_interval = interval;
    const double dt = dt_cfg > 0.0 ? dt_cfg : meanfield::suggested_vlasov_dt(a, K);
    const auto rep = meanfield::dobrushin_check(a, b, K, T, dt, L, opt, tol);
    const auto table = rep.table();
    out.csv("dobrushin.csv", table);
    out.plot("plot_dobrushin.svg", table, "t", {"w1", "bound"}, "W1 against the Dobrushin bound");
    Summary s;
    s.add("holds", rep.holds).add("degenerate", rep.degenerate).add("max_ratio", rep.max_ratio).add("L", rep.L);
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

inline Job plan_vlasov(Config& cfg, std::uint64_t) {
  const double K = cfg.get_double("model.K", 2.0);
  const double T = cfg.get_double("vlasov.T", 5.0);
  const std::size_t n = cfg.get_size("grid.cells", 512);
  const double dt_cfg = cfg.get_double("vlasov.dt", 0.0);
  const double interval = cfg.get_double("vlasov.record_interval", 0.1);
  const std::string initial = cfg.get_choice("vlasov.initial", "bump", {"bump", "uniform"});
  double center = std::numbers::pi, kappa = 1.0;
  if (initial == "bump") {
    center = cfg.get_double("bump.center", center);
    kappa = cfg.get_double("bump.kappa", kappa);
  }
  const auto freq = get_frequencies(cfg);
  if (n < 2) throw ConfigError("grid.cells", "must be >= 2");
  return [=](Artifacts& out) {
    const auto g = meanfield::DensityGrid::from_function(
        initial == "bump" ? meanfield::von_mises_bump(center, kappa) : meanfield::uniform_density(), n, freq.omegas,
        freq.zetas);
    meanfield::VlasovOptions opt;
    opt.record_interval = interval;
    const double dt = dt_cfg > 0.0 ? dt_cfg : meanfield::suggested_vlasov_dt(g, K);
    const auto tr = meanfield::vlasov_kuramoto_solve(g, K, T, dt, opt);
    const auto op = tr.order_parameter_table();
    out.csv("order_parameter.csv", op);
    out.plot("plot_order_parameter.svg", op, "t", {"order_parameter"}, "Order parameter of the density");
    for (std::size_t r = 0; r < g.components(); ++r) {
      out.csv("density_initial_" + std::to_string(r) + ".csv", tr.snapshots.front().table(r));
      out.csv("density_final_" + std::to_string(r) + ".csv", tr.snapshots.back().table(r));
    }
    Summary s;
    s.add("dt", tr.dt_used).add("steps", tr.steps).add("max_mass_step_error", tr.max_mass_step_error);
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

inline Job plan_boltzmann_stationary(Config& cfg, std::uint64_t seed) {
  const auto net = get_network(cfg);
  const auto conv = get_convention(cfg);
  const auto steps = cfg.get_sizes("gibbs.steps", {1000, 10000, 100000, 1000000});
  const std::size_t burn_in = cfg.get_size("gibbs.burn_in", 1000);
  if (net.size() > discrete_ips::kGibbsExactCap) throw ConfigError("network.A", "at most 12 vertices for exact comparison");
  return [=](Artifacts& out) {
    out.csv("distribution.csv", discrete_ips::distribution_table(discrete_ips::boltzmann_exact_distribution(net)));
    const auto tv = discrete_ips::gibbs_tv_trace(net, steps, burn_in, SeededRng(seed), conv);
    out.csv("tv.csv", tv);
    out.plot("plot_tv.svg", tv, "steps", {"tv_distance"}, "Total variation to the Boltzmann distribution");
    Summary s;
    s.add("convention", discrete_ips::to_string(conv));
    s.add("detailed_balance_violation", net.size() <= 12 ? discrete_ips::detailed_balance_violation(net, conv) : std::nan(""));
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

inline Job plan_kl_objective(Config& cfg, std::uint64_t) {
  const auto net = get_network(cfg);
  const std::size_t d = cfg.get_size("kl.visible", 1);
  if (d == 0 || d > net.size()) throw ConfigError("kl.visible", "must satisfy 1 <= d <= M");
  const std::size_t n = std::size_t{1} << d;
  const Vector p_plus = cfg.get_reals("kl.p_plus", Vector(n, 1.0 / static_cast<double>(n)));
  if (p_plus.size() != n) throw ConfigError("kl.p_plus", "needs 2^d = " + std::to_string(n) + " entries");
  return [=](Artifacts& out) {
    const Vector p_minus = discrete_ips::visible_marginal(net, d);
    io::CsvTable table({"visible_index", "p_plus", "p_minus"});
    for (std::size_t k = 0; k < n; ++k) table.add({k, p_plus[k], p_minus[k]});
    out.csv("marginals.csv", table);
    Summary s;
    s.add("kl", discrete_ips::kl_objective(p_plus, net, d));
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

inline Job plan_vanishing_gradient(Config& cfg, std::uint64_t) {
  const double eps = cfg.get_double("flow.epsilon", 0.01);
  const double horizon = cfg.get_double("flow.horizon", 10.0);
  const double dt = cfg.get_double("flow.dt", 0.01);
  const Vector p0 = cfg.get_reals("flow.p0", {1.0, 1.0});
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("flow.epsilon", "must lie in (0, 1]");
  if (!(dt > 0.0)) throw ConfigError("flow.dt", "must be positive");
  if (p0.size() != 2) throw ConfigError("flow.p0", "needs two entries");
  return [=](Artifacts& out) {
    const auto tr = training::vanishing_gradient_demo(eps, horizon, dt, p0);
    const auto table = tr.table();
    out.csv("vanishing_gradient.csv", table);
    out.plot("plot_vanishing_gradient.svg", table, "t", {"p1", "p2"}, "Gradient components");
    Summary s;
    s.add("decay_time_1", tr.decay_times[0]).add("decay_time_2", tr.decay_times[1]);
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

inline Job plan_variational_check(Config& cfg, std::uint64_t seed) {
  const std::size_t m = cfg.get_size("variational.m", 3);
  const std::size_t depth = cfg.get_size("variational.depth", 20);
  const double T = cfg.get_double("variational.T", 1.0);
  const Vector x0 = get_point(cfg, "variational.input", Vector(m, 0.5), m);
  if (m == 0) throw ConfigError("variational.m", "must be >= 1");
  if (depth == 0) throw ConfigError("variational.depth", "must be >= 1");
  return [=](Artifacts& out) {
    SeededRng rng(seed);
    Matrix A(m, m);
    for (double& v : A.data()) v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
    Vector c(m);
    for (double& v : c) v = rng.normal(0.0, 0.5);
    auto F = [A, c](const Vector& x) {
      Vector y = A * x;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i] + c[i]);
      return y;
    };
    auto DF = [A, c](const Vector& x) {
      Vector y = A * x;
      Matrix J = A;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double s = 1.0 - std::pow(std::tanh(y[i] + c[i]), 2);
        for (std::size_t j = 0; j < J.cols(); ++j) J(i, j) *= s;
      }
      return J;
    };
    const std::vector<training::Stage> stages(depth, training::euler_stage(F, DF, T / static_cast<double>(depth)));
    const Matrix fwd = training::forward_jacobian(stages, x0);
    const Matrix fd = finite_diff_jacobian(
        [&](const Vector& x) { return training::variational_propagate(stages, x, x, training::PropagationMode::Forward).output; },
        x0);
    io::CsvTable table({"row", "col", "forward", "reverse", "finite_difference"});
    double worst_mode = 0.0, worst_fd = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      Vector e(m, 0.0);
      e[i] = 1.0;
      const auto rev = training::variational_propagate(stages, x0, e, training::PropagationMode::Reverse).derivative;
      for (std::size_t j = 0; j < m; ++j) {
        table.add({i, j, fwd(i, j), rev[j], fd(i, j)});
        worst_mode = std::max(worst_mode, std::abs(fwd(i, j) - rev[j]));
        worst_fd = std::max(worst_fd, std::abs(fwd(i, j) - fd(i, j)));
      }
    }
    out.csv("jacobian.csv", table);
    Summary s;
    s.add("max_forward_reverse_gap", worst_mode).add("max_forward_fd_gap", worst_fd);
    out.csv("summary.csv", s.table());
    return kExitOk;
  };
}

struct ExperimentInfo {
  std::string description;
  std::function<Job(Config&, std::uint64_t)> plan;
};

inline const std::map<std::string, ExperimentInfo>& experiments() {
  static const std::map<std::string, ExperimentInfo> table{
      {"boltzmann-stationary", {"Glauber chain against the exact Boltzmann distribution", plan_boltzmann_stationary}},
      {"dobrushin", {"W1 between two Vlasov solutions against e^{2Lt} W1(0)", plan_dobrushin}},
      {"edge-of-stability", {"gradient descent with the sharpness trace", plan_edge_of_stability}},
      {"ips-simulate", {"interacting particle simulation", plan_ips_simulate}},
      {"kl-objective", {"KL divergence of a visible distribution to the model marginal", plan_kl_objective}},
      {"lyapunov", {"top Lyapunov exponent of the SGD batch Jacobians", plan_lyapunov}},
      {"meanfield-converge", {"particle against Vlasov sup-time W1 for several M", plan_meanfield_converge}},
      {"memory-report", {"neural DDE memory capacity regimes", plan_memory_report}},
      {"milnor-probe", {"fraction of SGD runs from a ball that converge", plan_milnor_probe}},
      {"morse-classify", {"critical points and function class of a scalar network", plan_morse_classify}},
      {"ndde-forward", {"neural DDE state on a time grid", plan_ndde_forward}},
      {"node-forward", {"neural ODE state trajectory", plan_node_forward}},
      {"vanishing-gradient", {"gradient flow with a small curvature direction", plan_vanishing_gradient}},
      {"variational-check", {"forward, reverse and finite-difference Jacobians of an Euler chain", plan_variational_check}},
      {"vlasov", {"Kuramoto Vlasov density evolution", plan_vlasov}},
  };
  return table;
}

}  // namespace dynlab::cli
