#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dynlab/morse.hpp"

using namespace dynlab;
using namespace dynlab::morse;
using Catch::Approx;

namespace {

ScalarField analytic(std::size_t d, std::function<double(const Vector&)> f, std::function<Vector(const Vector&)> g) {
  return ScalarField{d, std::move(f), std::move(g)};
}

ScalarField circle() {
  return analytic(
      2, [](const Vector& x) { return x[0] * x[0] + x[1] * x[1] - 1.0; },
      [](const Vector& x) { return Vector{2 * x[0], 2 * x[1]}; });
}

ScalarField saddle() {
  return analytic(
      2, [](const Vector& x) { return x[1] * x[1] - x[0] * x[0]; },
      [](const Vector& x) { return Vector{-2 * x[0], 2 * x[1]}; });
}

ScalarField monomial(int n) {
  return analytic(
      1, [n](const Vector& x) { return std::pow(x[0], n); },
      [n](const Vector& x) { return Vector{n * std::pow(x[0], n - 1)}; });
}

/// Psi(Q x) + shift, scaled by c.
ScalarField transformed(const ScalarField& f, const Matrix& Q, double c, double shift) {
  return analytic(
      f.dim, [=](const Vector& x) { return c * f.value(Q * x) + shift; },
      [=](const Vector& x) {
        Vector g = Q.transpose() * f.grad(Q * x);
        for (double& v : g) v *= c;
        return g;
      });
}

Matrix random_rotation(std::size_t d, SeededRng& rng) {
  Matrix a(d, d);
  for (double& v : a.data()) v = rng.normal();
  return qr_decompose(a).q;
}

}  // namespace

TEST_CASE("find_critical_points examples", "[morse]") {
  SeededRng rng(1);
  const auto circ = find_critical_points(circle(), Box::cube(2, 2.0), rng);
  REQUIRE(circ.points.size() == 1);
  CHECK(norm2(circ.points[0].location) < 1e-6);
  CHECK(circ.points[0].hessian_eigenvalues[0] == Approx(2.0).margin(1e-6));
  CHECK(circ.points[0].hessian_eigenvalues[1] == Approx(2.0).margin(1e-6));

  const auto sad = find_critical_points(saddle(), Box::cube(2, 2.0), rng);
  REQUIRE(sad.points.size() == 1);
  CHECK(norm2(sad.points[0].location) < 1e-6);
  CHECK(sad.points[0].hessian_eigenvalues[0] == Approx(-2.0).margin(1e-6));
  CHECK(sad.points[0].hessian_eigenvalues[1] == Approx(2.0).margin(1e-6));

  const auto affine = find_critical_points(
      analytic(1, [](const Vector& x) { return x[0] + 5.0; }, [](const Vector&) { return Vector{1.0}; }),
      Box::cube(1, 2.0), rng);
  CHECK(affine.points.empty());
  CHECK(affine.dropped_starts == 64);

  CHECK_THROWS_AS(find_critical_points(circle(), Box{{0.0, 0.0}, {1.0, 0.0}}, rng), InputError);
  SearchOptions none;
  none.starts = 0;
  CHECK_THROWS_AS(find_critical_points(circle(), Box::cube(2, 1.0), rng, none), InputError);
}

TEST_CASE("reported points re-evaluate below grad_tol", "[morse]") {
  SeededRng rng(5);
  auto wavy = analytic(
      2, [](const Vector& x) { return std::sin(2 * x[0]) * std::cos(3 * x[1]); },
      [](const Vector& x) {
        return Vector{2 * std::cos(2 * x[0]) * std::cos(3 * x[1]), -3 * std::sin(2 * x[0]) * std::sin(3 * x[1])};
      });
  SearchOptions opt;
  opt.starts = 200;
  const auto res = find_critical_points(wavy, Box::cube(2, 1.5), rng, opt);
  CHECK(res.points.size() >= 4);
  for (const auto& p : res.points) {
    CHECK(norm2(wavy.grad(p.location)) <= opt.grad_tol);
    CHECK_FALSE(p.degenerate);
  }
  for (std::size_t i = 1; i < res.points.size(); ++i) {
    CHECK(norm2(res.points[i].location - res.points[i - 1].location) > opt.merge_radius);
  }
}

TEST_CASE("classify_function examples", "[morse]") {
  SeededRng rng(2);
  const Box unit = Box::cube(1, 1.0);
  CHECK(classify_function(monomial(2), unit, rng).verdict == Verdict::C2);
  const auto cubic = classify_function(monomial(3), unit, rng);
  CHECK(cubic.verdict == Verdict::C3);
  REQUIRE(cubic.critical_points.size() == 1);
  CHECK(std::abs(cubic.critical_points[0].location[0]) < 1e-4);
  CHECK(classify_function(monomial(4), unit, rng).verdict == Verdict::C3);
  const auto th = analytic(
      1, [](const Vector& x) { return std::tanh(x[0]); },
      [](const Vector& x) { return Vector{1.0 - std::tanh(x[0]) * std::tanh(x[0])}; });
  const auto rep = classify_function(th, unit, rng);
  CHECK(rep.verdict == Verdict::C1);
  CHECK(rep.critical_points.empty());

  const auto c = classify_function(circle(), Box::cube(2, 2.0), rng);
  CHECK(c.verdict == Verdict::C2);
  CHECK(norm2(c.critical_points.at(0).location) < 1e-6);
  const auto s = classify_function(saddle(), Box::cube(2, 2.0), rng);
  CHECK(s.verdict == Verdict::C2);
  CHECK(norm2(s.critical_points.at(0).location) < 1e-6);
}

TEST_CASE("a near-critical slope outside the box is inconclusive", "[morse]") {
  SeededRng rng(3);
  // Critical point at x = 1.0000001, just outside [-1, 1].
  const auto f = analytic(
      1, [](const Vector& x) { return (x[0] - 1.0000001) * (x[0] - 1.0000001); },
      [](const Vector& x) { return Vector{2 * (x[0] - 1.0000001)}; });
  SearchOptions opt;
  opt.grid_budget = 101;
  CHECK(classify_function(f, Box::cube(1, 1.0), rng, opt).verdict == Verdict::Inconclusive);
}

TEST_CASE("verdicts are invariant under constants, rotations and positive scaling", "[morse][property]") {
  SeededRng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + rng.uniform_index(2);
    Vector coef(d);
    for (auto& c : coef) c = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const bool cubic = rng.uniform() < 0.5;
    ScalarField base = analytic(
        d,
        [coef, cubic](const Vector& x) {
          double v = cubic ? x[0] * x[0] * x[0] : coef[0] * x[0] * x[0];
          for (std::size_t i = 1; i < x.size(); ++i) v += coef[i] * x[i] * x[i];
          return v;
        },
        [coef, cubic](const Vector& x) {
          Vector g(x.size());
          g[0] = cubic ? 3 * x[0] * x[0] : 2 * coef[0] * x[0];
          for (std::size_t i = 1; i < x.size(); ++i) g[i] = 2 * coef[i] * x[i];
          return g;
        });
    const Box box = Box::cube(d, 1.0);
    SearchOptions opt;
    opt.starts = 16;
    opt.grid_budget = 2000;
    SeededRng r1(trial), r2(trial + 1000), r3(trial + 2000);
    const auto ref = classify_function(base, box, r1, opt);
    REQUIRE(ref.verdict == (cubic ? Verdict::C3 : Verdict::C2));

    const Matrix Q = random_rotation(d, rng);
    const double shift = rng.normal(0.0, 10.0);
    const auto rotated = classify_function(transformed(base, Q, 1.0, shift), box, r2, opt);
    REQUIRE(rotated.verdict == ref.verdict);

    const double c = std::exp(rng.uniform(-3.0, 3.0));
    const auto scaled = classify_function(transformed(base, Matrix::identity(d), c, 0.0), box, r3, opt);
    REQUIRE(scaled.verdict == ref.verdict);
    REQUIRE(scaled.critical_points.size() == ref.critical_points.size());
    for (std::size_t i = 0; i < ref.critical_points.size(); ++i) {
      REQUIRE(norm2(scaled.critical_points[i].location - ref.critical_points[i].location) <= opt.merge_radius);
    }
  }
}

TEST_CASE("classification table rows", "[morse]") {
  SeededRng rng(2024);
  const auto tanh = networks::Activation::tanh();

  const auto non_aug = verify_mlp_row({3, 2, 1}, tanh, ArchClass::NonAugmented, rng, 50);
  CHECK(non_aug.count(Verdict::C1) == 50);
  CHECK(non_aug.passed());

  const auto aug = verify_mlp_row({1, 3, 1}, tanh, ArchClass::Augmented, rng, 50);
  CHECK(aug.count(Verdict::C1) + aug.count(Verdict::C2) == 50);
  CHECK(aug.passed());
  CHECK(aug.count(Verdict::C2) > 0);

  RowSearch coarse;
  coarse.options.starts = 8;
  coarse.options.grid_budget = 100;
  const auto degen = verify_node_row({2, 2, 1.0, 10}, ArchClass::Degenerate, rng, 5, coarse);
  CHECK(degen.passed());
  CHECK(degen.count(Verdict::C3) == 5);

  const auto node_non_aug = verify_node_row({2, 2, 1.0, 10}, ArchClass::NonAugmented, rng, 5, coarse);
  CHECK(node_non_aug.count(Verdict::C1) == 5);

  CHECK_THROWS_AS(verify_mlp_row({2, 2, 2}, tanh, ArchClass::NonAugmented, rng, 1), UnsupportedError);
  CHECK_THROWS_AS(verify_mlp_row({3, 2, 1}, tanh, ArchClass::Augmented, rng, 1), InputError);
}

TEST_CASE("report CSV has one row per point plus a summary", "[morse]") {
  SeededRng rng(9);
  const auto rep = classify_function(circle(), Box::cube(2, 2.0), rng);
  const auto t = report_table(rep);
  CHECK(t.header() == std::vector<std::string>{"kind", "x1", "x2", "gradient_norm", "min_abs_eig", "degenerate", "verdict"});
  REQUIRE(t.row_count() == 2);
  CHECK(t.rows()[0][0] == "point");
  CHECK(t.rows()[1][0] == "summary");
  CHECK(t.rows()[1].back() == "C2");
}
