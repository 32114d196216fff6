#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dynlab/numerics.hpp"
#include "dynlab/training.hpp"

using namespace dynlab;
using namespace dynlab::training;
using Catch::Approx;

namespace {

LossModel scalar_quadratic(double c) { return quadratic_model(Matrix{{c}}); }

/// Phi(theta, x) = theta x on the given inputs with zero targets.
LossModel scalar_linear(std::vector<double> xs, LossKind kind = LossKind::HalfSquared) {
  Dataset d;
  for (double x : xs) {
    d.xs.push_back({x});
    d.ys.push_back({0.0});
  }
  return LossModel(std::make_shared<LinearFunctional>(1), d, kind);
}

}  // namespace

TEST_CASE("loss and gradient examples", "[training]") {
  const auto prod2 = prod2_model();
  CHECK(prod2.loss({3.0, 0.5}) == Approx(0.25));
  CHECK(prod2.loss({2.0, 0.5}) == 0.0);
  CHECK(prod2.grad_loss({2.0, 0.5}) == Vector{0.0, 0.0});
  CHECK(prod2.regime() == Regime::Overparameterized);
  // dL/dtheta1 = -2 theta2 (1 - theta1 theta2)
  const Vector g = prod2.grad_loss({0.5, 0.5});
  CHECK(g[0] == Approx(-0.75));
  CHECK(g[1] == Approx(-0.75));

  const auto two = two_point_scalar_model();
  CHECK(two.batch_loss({1.0}, {0}) == Approx(0.5));
  CHECK(two.batch_loss({1.0}, {1}) == Approx(2.0));
  CHECK(two.batch_loss({1.0}, {0, 1}) == two.loss({1.0}));
  CHECK(two.regime() == Regime::Overdetermined);
  CHECK_THROWS_AS(two.batch_loss({1.0}, {2}), InputError);
  CHECK_THROWS_AS(two.loss({1.0, 2.0}), DimensionError);

  const auto q = quadratic_model(Matrix{{2.0, 0.5}, {0.5, 1.0}});
  const Vector th{0.3, -0.7};
  CHECK(q.loss(th) == Approx(0.5 * (2 * 0.09 + 2 * 0.5 * 0.3 * -0.7 + 0.49)));
  CHECK_THROWS_AS(quadratic_model(Matrix{{-1.0}}), InputError);
}

TEST_CASE("reverse-mode gradient matches finite differences", "[training][property]") {
  SeededRng rng(100);
  for (int trial = 0; trial < 200; ++trial) {
    const int kind = trial % 4;
    if (kind == 0) {
      Vector th{rng.normal(), rng.normal()};
      REQUIRE(gradient_check(prod2_model(), th) <= 1e-5);
    } else if (kind == 1) {
      REQUIRE(gradient_check(two_point_scalar_model(), Vector{rng.normal()}) <= 1e-5);
    } else if (kind == 2) {
      Matrix a(3, 3);
      for (double& v : a.data()) v = rng.normal();
      const auto q = quadratic_model(a.transpose() * a);
      REQUIRE(gradient_check(q, Vector{rng.normal(), rng.normal(), rng.normal()}) <= 1e-5);
    } else {
      const auto m = mlp_regression_model({2, 3, 1}, networks::Activation::tanh(), 4, rng);
      Vector th(m.parameter_dim());
      for (double& v : th) v = rng.normal();
      REQUIRE(gradient_check(m, th) <= 1e-5);
    }
  }
}

TEST_CASE("gd_run on a 1D quadratic follows the closed form", "[training]") {
  const double c = 4.0;
  const auto model = scalar_quadratic(c);
  GDConfig cfg;
  cfg.eta = 0.45;
  cfg.max_steps = 200;
  const auto tr = gd_run(model, {1.0}, cfg);
  REQUIRE_FALSE(tr.diverged);
  for (const auto& p : tr.points) {
    CHECK(p.theta[0] == Approx(std::pow(1 - cfg.eta * c, static_cast<double>(p.step))).margin(1e-14));
  }
  CHECK(std::abs(tr.last().theta[0]) < 1e-8);

  cfg.eta = 2.1 / c;
  cfg.max_steps = 100000;
  const auto div = gd_run(model, {1.0}, cfg);
  CHECK(div.diverged);
  CHECK(div.steps_taken == Approx(std::log(1e12) / std::log(1.1)).margin(2));

  cfg.eta = 0.3;
  const auto fixed = gd_run(model, {0.0}, cfg);
  CHECK_FALSE(fixed.diverged);
  for (const auto& p : fixed.points) CHECK(p.theta[0] == 0.0);

  CHECK_THROWS_AS(gd_run(model, {1.0}, GDConfig{-1.0}), ConfigError);
}

TEST_CASE("gradient flow fixed points are GD fixed points", "[training][property]") {
  SeededRng rng(4);
  const auto prod2 = prod2_model();
  for (int i = 0; i < 20; ++i) {
    const double a = std::exp(rng.uniform(-1.0, 1.0));
    GDConfig cfg;
    cfg.eta = rng.uniform(0.01, 0.3);
    cfg.max_steps = 50;
    const Vector start{a, 1.0 / a};
    const auto tr = gd_run(prod2, start, cfg);
    for (const auto& p : tr.points) CHECK(norm_inf(p.theta - start) <= 1e-15);
  }
}

TEST_CASE("sgd_run", "[training]") {
  const auto two = two_point_scalar_model();
  GDConfig cfg;
  cfg.eta = 0.4;
  cfg.max_steps = 100;
  cfg.batch_size = 1;
  SeededRng a(7), b(7);
  const auto t1 = sgd_run(two, {1.0}, cfg, a);
  const auto t2 = sgd_run(two, {1.0}, cfg, b);
  REQUIRE(t1.points.size() == t2.points.size());
  for (std::size_t i = 0; i < t1.points.size(); ++i) CHECK(t1.points[i].theta == t2.points[i].theta);
  CHECK(t1.batches == t2.batches);
  CHECK(t1.batches.size() == 100);
  CHECK(std::abs(t1.last().theta[0]) < 1e-20);

  // Identical per-example losses: SGD is GD.
  const auto same = scalar_linear({1.5, 1.5, 1.5, 1.5});
  cfg.batch_size = 2;
  SeededRng c(3);
  const auto s = sgd_run(same, {0.8}, cfg, c);
  cfg.batch_size.reset();
  const auto g = gd_run(same, {0.8}, cfg);
  REQUIRE(s.points.size() == g.points.size());
  for (std::size_t i = 0; i < s.points.size(); ++i) CHECK(s.points[i].theta == g.points[i].theta);

  cfg.batch_size = 1;
  SeededRng d(1);
  CHECK_THROWS_AS(sgd_run(scalar_linear({1.0}), {1.0}, cfg, d), ConfigError);
  cfg.batch_size = 2;
  CHECK_THROWS_AS(sgd_run(two, {1.0}, cfg, d), ConfigError);
}

TEST_CASE("SGD replays satisfy the cocycle property", "[training][property]") {
  SeededRng master(55);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = mlp_regression_model({2, 2, 1}, networks::Activation::tanh(), 5, master);
    Vector th(model.parameter_dim());
    for (double& v : th) v = master.normal();
    const std::size_t n = 1 + master.uniform_index(20), m = 1 + master.uniform_index(20);
    GDConfig cfg;
    cfg.eta = 0.05;
    cfg.batch_size = 2;
    const std::uint64_t seed = master.next();

    SeededRng whole(seed);
    cfg.max_steps = n + m;
    const auto full = sgd_run(model, th, cfg, whole);

    SeededRng split(seed);
    cfg.max_steps = m;
    const auto first = sgd_run(model, th, cfg, split);
    cfg.max_steps = n;
    const auto second = sgd_run(model, first.last().theta, cfg, split);

    REQUIRE(second.last().theta == full.last().theta);
    REQUIRE(split == whole);
  }
}

TEST_CASE("find_minimum", "[training]") {
  const auto prod2 = prod2_model();
  const auto rep = find_minimum(prod2, {2.5, 0.41});
  CHECK(rep.on_manifold);
  CHECK(std::abs(1.0 - rep.theta[0] * rep.theta[1]) <= 1e-9);

  const auto same = find_minimum(prod2, {2.0, 0.5});
  CHECK(same.on_manifold);
  CHECK(same.theta == Vector{2.0, 0.5});
  CHECK(same.total_steps == 0);

  Dataset bad{{Vector{1.0}, Vector{1.0}}, {Vector{1.0}, Vector{2.0}}};
  const LossModel inconsistent(std::make_shared<LinearFunctional>(1), bad, LossKind::HalfSquared);
  const auto off = find_minimum(inconsistent, {0.0});
  CHECK_FALSE(off.on_manifold);
  CHECK(off.residual == Approx(0.5).margin(1e-6));
}

TEST_CASE("hessian examples", "[training]") {
  const auto prod2 = prod2_model();
  const Matrix H = hessian(prod2, {1.0, 1.0});
  CHECK(H(0, 0) == Approx(2.0).margin(1e-8));
  CHECK(H(0, 1) == Approx(2.0).margin(1e-8));
  CHECK(H(1, 1) == Approx(2.0).margin(1e-8));

  const Matrix Q{{3.0, 1.0, 0.0}, {1.0, 2.0, 0.5}, {0.0, 0.5, 1.0}};
  const Matrix HQ = hessian(quadratic_model(Q), {0.4, -1.0, 2.0});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(HQ(i, j) - Q(i, j)) <= 1e-5 * Q.max_abs());

  const Matrix Z = hessian(quadratic_model(Matrix(2, 2)), {1.0, 1.0});
  CHECK(Z.max_abs() == 0.0);

  // Analytic Hessian of (1 - ab)^2: [[2b^2, 4ab - 2], [4ab - 2, 2a^2]].
  SeededRng rng(6);
  for (int i = 0; i < 50; ++i) {
    const double a = rng.normal(), b = rng.normal();
    const Matrix h = hessian(prod2, {a, b});
    const double scale = std::max({2 * b * b, std::abs(4 * a * b - 2), 2 * a * a});
    CHECK(std::abs(h(0, 0) - 2 * b * b) <= 1e-5 * scale);
    CHECK(std::abs(h(0, 1) - (4 * a * b - 2)) <= 1e-5 * scale);
    CHECK(std::abs(h(1, 1) - 2 * a * a) <= 1e-5 * scale);
  }
}

TEST_CASE("tangent_normal_split", "[training]") {
  const auto prod2 = prod2_model();
  const auto s = tangent_normal_split(prod2, {1.0, 1.0});
  REQUIRE(s.tangent.cols() == 1);
  REQUIRE(s.normal.cols() == 1);
  CHECK_FALSE(s.dimension_mismatch);
  CHECK(std::abs(s.tangent(0, 0) + s.tangent(1, 0)) < 1e-8);
  CHECK(std::abs(s.normal(0, 0) - s.normal(1, 0)) < 1e-8);

  const auto s2 = tangent_normal_split(prod2, {2.0, 0.5});
  const double t0 = s2.tangent(0, 0), t1 = s2.tangent(1, 0);
  // Tangent of ab = 1 at (2, 1/2) is parallel to (2, -1/2).
  CHECK(std::abs(t0 * -0.5 - t1 * 2.0) < 1e-8);

  const auto q = quadratic_model(Matrix{{2.0, 0.0}, {0.0, 1.0}});
  const auto sq = tangent_normal_split(q, {0.0, 0.0});
  CHECK(sq.tangent.cols() == 0);
  CHECK(sq.normal.cols() == 2);

  const auto zero = tangent_normal_split(quadratic_model(Matrix(2, 2)), {0.3, 0.3});
  CHECK(zero.zero_hessian);
  CHECK(zero.tangent.cols() == 2);

  CHECK_THROWS_AS(tangent_normal_split(prod2, {1.0, 2.0}), InputError);
}

TEST_CASE("tangent and normal bases are orthonormal and split the Hessian", "[training][property]") {
  const auto prod2 = prod2_model();
  for (double a : {0.3, 0.5, 1.0, 1.7, 2.0, 3.0}) {
    const Vector th{a, 1.0 / a};
    const auto s = tangent_normal_split(prod2, th);
    Matrix B(2, 2);
    B.set_col(0, s.tangent.col(0));
    B.set_col(1, s.normal.col(0));
    const Matrix I = B.transpose() * B;
    CHECK(std::abs(I(0, 0) - 1.0) <= 1e-10);
    CHECK(std::abs(I(1, 1) - 1.0) <= 1e-10);
    CHECK(std::abs(I(0, 1)) <= 1e-10);
    const Matrix H = hessian(prod2, th);
    const Matrix tht = s.tangent.transpose() * (H * s.tangent);
    CHECK(std::abs(tht(0, 0)) <= 1e-6 * H.frobenius_norm());
    // Sharpness 2(a^2 + a^-2).
    CHECK(sharpness(prod2, th) == Approx(2 * (a * a + 1 / (a * a))).margin(1e-6));
  }
}

TEST_CASE("spectral_stability examples", "[training]") {
  const auto prod2 = prod2_model();
  const auto st = spectral_stability(prod2, {1.0, 1.0}, 0.4);
  CHECK(st.sharpness == Approx(4.0).margin(1e-8));
  CHECK(st.verdict == StabilityVerdict::Stable);
  CHECK(spectral_stability(prod2, {1.0, 1.0}, 0.6).verdict == StabilityVerdict::Unstable);
  CHECK(spectral_stability(prod2, {1.0, 1.0}, 0.5).verdict == StabilityVerdict::Edge);
}

TEST_CASE("gd stability flag is invariant under loss scaling", "[training][property]") {
  SeededRng rng(12);
  const auto prod2 = prod2_model();
  for (int i = 0; i < 100; ++i) {
    const double a = std::exp(rng.uniform(-1.0, 1.0));
    const double eta = rng.uniform(0.05, 1.0);
    const double c = std::exp(rng.uniform(-2.0, 2.0));
    const Vector th{a, 1.0 / a};
    const auto base = spectral_stability(prod2, th, eta);
    const auto scaled = spectral_stability(prod2.scaled(c), th, eta / c);
    CHECK(scaled.sharpness == Approx(c * base.sharpness).epsilon(1e-8));
    REQUIRE(base.gd_stable() == scaled.gd_stable());
  }
}

TEST_CASE("edge_of_stability_trace", "[training]") {
  const auto q = quadratic_model(Matrix{{3.0, 0.0}, {0.0, 1.0}});
  GDConfig cfg;
  cfg.eta = 0.5;
  cfg.max_steps = 40;
  const auto flat = edge_of_stability_trace(q, {1.0, 1.0}, cfg, 5);
  for (const auto& r : flat.rows) CHECK(r.sharpness == Approx(3.0).epsilon(1e-6));
  CHECK(flat.rows.back().threshold == 4.0);
  CHECK(flat.table().header() == std::vector<std::string>{"step", "loss", "grad_norm", "sharpness", "threshold"});

  const auto prod2 = prod2_model();
  cfg.eta = 0.2;
  cfg.max_steps = 500;
  const auto eos = edge_of_stability_trace(prod2, {2.5, 0.41}, cfg, 10);
  REQUIRE_FALSE(eos.diverged);
  CHECK(eos.final_residual <= 1e-9);
  CHECK(eos.terminal_sharpness() <= 10.0 + 1e-6);
  CHECK(std::abs(eos.final_theta[0]) > 0.4568);
  CHECK(std::abs(eos.final_theta[0]) < 2.1889);

  // eta = 1/2 leaves the region around theta_1 = 2.5 under either convention.
  cfg.eta = 0.5;
  const auto squared = edge_of_stability_trace(prod2, {2.5, 0.41}, cfg, 10);
  CHECK(squared.diverged);
  const auto half = edge_of_stability_trace(prod2_model(LossKind::HalfSquared), {2.5, 0.41}, cfg, 10);
  CHECK_FALSE(half.diverged);
  CHECK(std::abs(half.final_theta[0] - 2.5) > 1.0);
}

TEST_CASE("milnor_probe examples", "[training]") {
  const auto q = scalar_quadratic(1.0);
  SeededRng rng(8);
  MilnorOptions opt;
  opt.samples = 50;
  opt.eta = 1.0;
  opt.horizon = 5;
  CHECK(milnor_probe(q, {0.0}, opt, rng).fraction() == 1.0);
  opt.eta = 2.5;
  opt.horizon = 200;
  CHECK(milnor_probe(q, {0.0}, opt, rng).fraction() == 0.0);

  const auto prod2 = prod2_model();
  MilnorOptions m;
  m.eta = 0.4;
  m.radius = 0.1;
  m.samples = 500;
  m.horizon = 300;
  m.tol = 1e-9;
  m.mode = ProbeMode::Manifold;
  const auto res = milnor_probe(prod2, {1.0, 1.0}, m, rng);
  CHECK(res.fraction() > 0.0);
  CHECK(res.table().row_count() == 500);

  // Same master seed, same outcome.
  const auto again = milnor_probe(prod2, {1.0, 1.0}, m, rng);
  CHECK(again.converged == res.converged);
}

TEST_CASE("batch_normal_jacobians", "[training]") {
  const auto two = two_point_scalar_model();
  SeededRng rng(0);
  const double eta = 0.3;
  const auto bj = batch_normal_jacobians(two, {0.0}, eta, 1, rng);
  REQUIRE(bj.matrices.size() == 2);
  CHECK(bj.enumerated);
  CHECK(bj.matrices[0](0, 0) == Approx(1 - eta).margin(1e-8));
  CHECK(bj.matrices[1](0, 0) == Approx(1 - 4 * eta).margin(1e-8));

  const auto full = batch_normal_jacobians(two, {0.0}, eta, 2, rng);
  REQUIRE(full.matrices.size() == 1);
  CHECK(full.matrices[0](0, 0) == Approx(1 - 2.5 * eta).margin(1e-8));

  // Example 2 has zero Hessian where its input is zero.
  Dataset d{{Vector{1.0}, Vector{0.0}}, {Vector{0.0}, Vector{0.0}}};
  const LossModel lazy(std::make_shared<LinearFunctional>(1), d, LossKind::HalfSquared);
  const auto bl = batch_normal_jacobians(lazy, {0.0}, eta, 1, rng);
  CHECK(bl.matrices[1](0, 0) == Approx(1.0).margin(1e-12));

  const auto big = scalar_linear(std::vector<double>(30, 1.0));
  const auto sampled = batch_normal_jacobians(big, {0.0}, eta, 10, rng, 50);
  CHECK_FALSE(sampled.enumerated);
  CHECK(sampled.matrices.size() == 50);
}

TEST_CASE("lyapunov_exponent closed forms", "[training]") {
  SeededRng rng(31);
  LyapunovOptions opt;
  for (double eta : {0.4, 1.5}) {
    const std::vector<Matrix> mats{Matrix{{1 - eta}}, Matrix{{1 - 4 * eta}}};
    const auto est = lyapunov_exponent(mats, {0.5, 0.5}, opt, rng);
    const double truth = 0.5 * (std::log(std::abs(1 - eta)) + std::log(std::abs(1 - 4 * eta)));
    CHECK(std::abs(est.lambda - truth) <= 3 * est.standard_error + 1e-12);
    CHECK(est.table().row_count() == opt.checkpoints);
  }

  LyapunovOptions quick;
  quick.n_steps = 2000;
  quick.replicates = 5;
  const auto diag = lyapunov_exponent({Matrix{{2.0, 0.0}, {0.0, 0.5}}}, {1.0}, quick, rng);
  CHECK(diag.lambda == Approx(std::log(2.0)).margin(1e-12));
  CHECK(diag.spectrum[1] == Approx(std::log(0.5)).margin(1e-12));

  const auto zero = lyapunov_exponent({Matrix(2, 2)}, {1.0}, quick, rng);
  CHECK(zero.minus_infinity);
  CHECK(zero.lambda == -std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(lyapunov_exponent({Matrix{{1.0}}}, {0.5}, quick, rng), InputError);
  CHECK_THROWS_AS(lyapunov_exponent({Matrix{{1.0}}, Matrix(2, 2)}, {0.5, 0.5}, quick, rng), DimensionError);
}

TEST_CASE("lyapunov_exponent of one matrix is log spectral radius", "[training][property]") {
  SeededRng rng(77);
  LyapunovOptions opt;
  opt.n_steps = 5000;
  opt.replicates = 8;
  opt.burn_in = 500;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(4);
    Matrix a(k, k);
    for (double& v : a.data()) v = rng.normal();
    const auto est = lyapunov_exponent({a}, {1.0}, opt, rng.split(trial));
    REQUIRE(std::abs(est.lambda - std::log(spectral_radius(a))) <= 3 * est.standard_error + 1e-12);
  }
}

TEST_CASE("regularity_check", "[training]") {
  const auto half = regularity_check({Matrix{{0.5}}, Matrix{{0.5}}});
  CHECK(half.all_invertible());
  CHECK(half.irreducible_indicative);
  CHECK(half.regular());
  CHECK(half.irreducibility_label == "indicative");

  CHECK_FALSE(regularity_check({Matrix{{0.5}}, Matrix{{1.0}}}).regular());

  auto rot = [](double angle, double s) {
    return Matrix{{s * std::cos(angle), -s * std::sin(angle)}, {s * std::sin(angle), s * std::cos(angle)}};
  };
  const auto rs = regularity_check({rot(0.3, 0.9), rot(1.1, 0.5)});
  CHECK(rs.regular());

  // Shared eigenvector e1: reducible.
  const auto tri = regularity_check({Matrix{{0.5, 1.0}, {0.0, 0.3}}, Matrix{{0.2, -0.4}, {0.0, 0.7}}});
  CHECK(tri.all_invertible());
  CHECK_FALSE(tri.irreducible_indicative);

  const auto scalars = regularity_check({0.5 * Matrix::identity(2)});
  CHECK_FALSE(scalars.irreducible_indicative);

  const auto generic = regularity_check({Matrix{{0.5, 0.2}, {0.1, 0.3}}, Matrix{{0.1, -0.3}, {0.4, 0.6}}});
  CHECK(generic.irreducible_indicative);
}

TEST_CASE("variational_propagate", "[training]") {
  const std::vector<Stage> chain{
      scalar_stage([](double x) { return x * x; }, [](double x) { return 2 * x; }),
      scalar_stage([](double x) { return std::sin(x); }, [](double x) { return std::cos(x); })};
  const auto fwd = variational_propagate(chain, {0.5}, {1.0}, PropagationMode::Forward);
  const auto rev = variational_propagate(chain, {0.5}, {1.0}, PropagationMode::Reverse);
  CHECK(fwd.derivative[0] == Approx(std::cos(0.25)).margin(1e-15));
  CHECK(rev.derivative[0] == Approx(0.96891).margin(1e-5));
  CHECK(fwd.derivative == rev.derivative);

  const std::vector<Stage> ident{scalar_stage([](double x) { return x; }, [](double) { return 1.0; })};
  CHECK(variational_propagate(ident, {3.0}, {1.0}, PropagationMode::Reverse).derivative[0] == 1.0);
}

TEST_CASE("forward and reverse modes agree on random compositions", "[training][property]") {
  SeededRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 3;
    std::vector<Stage> stages;
    const std::size_t depth = 1 + rng.uniform_index(4);
    for (std::size_t s = 0; s < depth; ++s) {
      Matrix A(d, d);
      for (double& v : A.data()) v = rng.normal(0.0, 0.6);
      stages.push_back(euler_stage([A](const Vector& x) {
        Vector y = A * x;
        for (double& v : y) v = std::tanh(v);
        return y;
      },
                                   [A](const Vector& x) {
                                     Vector z = A * x;
                                     Matrix J = A;
                                     for (std::size_t i = 0; i < J.rows(); ++i) {
                                       const double s2 = 1 - std::tanh(z[i]) * std::tanh(z[i]);
                                       for (std::size_t j = 0; j < J.cols(); ++j) J(i, j) *= s2;
                                     }
                                     return J;
                                   },
                                   0.3));
    }
    Vector x0(d), c(d);
    for (double& v : x0) v = rng.normal();
    for (double& v : c) v = rng.normal();
    const Vector rev = variational_propagate(stages, x0, c, PropagationMode::Reverse).derivative;
    const Vector assembled = forward_jacobian(stages, x0).transpose_times(c);
    REQUIRE(norm_inf(rev - assembled) <= 1e-10);
    auto scalar = [&](const Vector& x) {
      Vector y = x;
      for (const auto& s : stages) y = s.apply(y);
      return dot(c, y);
    };
    const Vector fd = finite_diff_gradient(scalar, x0);
    REQUIRE(norm2(rev - fd) <= 1e-5 * std::max(norm2(rev), 1e-300));
  }
}

TEST_CASE("vanishing_gradient_demo", "[training]") {
  const auto tr = vanishing_gradient_demo(0.01, 5.0, 0.01);
  CHECK(tr.p.back()[0] == Approx(std::exp(-5.0)).margin(1e-7));
  CHECK(tr.p.back()[1] == Approx(std::exp(-0.05)).margin(1e-9));
  CHECK(tr.p.back()[0] == Approx(0.00674).margin(1e-5));
  CHECK(tr.p.back()[1] == Approx(0.95123).margin(1e-5));
  CHECK(tr.decay_times[0] == Approx(1.0).margin(1e-3));
  CHECK(std::isnan(tr.decay_times[1]));

  const auto sym = vanishing_gradient_demo(1.0, 2.0, 0.01);
  CHECK(sym.p.back()[0] == sym.p.back()[1]);

  const auto zero = vanishing_gradient_demo(0.5, 0.0, 0.1, {0.3, -0.2});
  REQUIRE(zero.p.size() == 1);
  CHECK(zero.p[0] == Vector{0.3, -0.2});
  CHECK_THROWS_AS(vanishing_gradient_demo(0.0, 1.0, 0.1), InputError);
}
