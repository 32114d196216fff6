#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dynlab/discrete_ips.hpp"

using namespace dynlab;
using namespace dynlab::discrete_ips;
using Catch::Approx;

namespace {

SpinNetwork random_network(std::size_t M, SeededRng& rng) {
  SpinNetwork net{Matrix(M, M), Vector(M)};
  for (std::size_t i = 0; i < M; ++i) {
    net.b[i] = rng.normal();
    for (std::size_t j = 0; j < i; ++j) net.A(i, j) = net.A(j, i) = rng.normal();
  }
  return net;
}

SpinNetwork ferromagnet() { return {Matrix{{0.0, 2.0}, {2.0, 0.0}}, Vector{0.0, 0.0}}; }

}  // namespace

TEST_CASE("energy examples", "[spin]") {
  const SpinNetwork pair = {Matrix{{0.0, 1.0}, {1.0, 0.0}}, Vector{0.0, 0.0}};
  CHECK(energy(pair, {0, 0}) == 0.0);
  CHECK(energy(pair, {1, 1}) == -1.0);
  const SpinNetwork field = {Matrix(2, 2), Vector{3.0, 0.0}};
  CHECK(energy(field, {1, 0}) == 3.0);
  CHECK_THROWS_AS(energy(field, {1, 2}), InputError);
  CHECK_THROWS_AS((SpinNetwork{Matrix{{1.0}}, Vector{0.0}}.validate()), StructuralError);
  CHECK_THROWS_AS((SpinNetwork{Matrix{{0.0, 1.0}, {0.0, 0.0}}, Vector{0.0, 0.0}}.validate()), StructuralError);
}

TEST_CASE("Boltzmann step probabilities", "[spin]") {
  const SpinNetwork flat = {Matrix(3, 3), Vector(3, 0.0)};
  for (std::size_t i = 0; i < 3; ++i) CHECK(activation_probability(flat, {1, 0, 1}, i) == 0.5);
  const SpinNetwork huge = {Matrix(1, 1), Vector{800.0}};
  CHECK(activation_probability(huge, {1}, 0) == 0.0);

  const SpinNetwork single = {Matrix(1, 1), Vector{-2.0}};
  const double p = 1.0 / (1.0 + std::exp(-2.0));
  CHECK(activation_probability(single, {0}, 0) == Approx(p).epsilon(1e-15));
  SeededRng rng(99);
  BinaryState v{0};
  std::size_t ones = 0;
  const std::size_t n = 100000;
  for (std::size_t s = 0; s < n; ++s) {
    v = boltzmann_step(single, v, rng);
    ones += static_cast<std::size_t>(v[0]);
  }
  CHECK(std::abs(static_cast<double>(ones) / n - p) <= 0.005);
}

TEST_CASE("Hopfield updates", "[spin]") {
  SeededRng rng(4);
  const SpinNetwork net = random_network(5, rng);
  HopfieldOptions literal;
  literal.rule = HopfieldRule::Literal;
  CHECK(hopfield_step(net, {0, 1, 0, 0, 1}, literal) == BinaryState(5, 1));
  CHECK(is_hopfield_fixed_point(net, BinaryState(5, 1), literal));

  const SpinNetwork single = {Matrix(1, 1), Vector{1.0}};
  CHECK(hopfield_step(single, {1}) == BinaryState{0});
  CHECK(is_hopfield_fixed_point(single, {0}));

  // A sweep reaches a fixed point, which then stays put under both orders.
  BinaryState v{1, 0, 1, 0, 1};
  for (int k = 0; k < 50; ++k) v = hopfield_step(net, v);
  CHECK(is_hopfield_fixed_point(net, v));
  HopfieldOptions sync;
  sync.order = UpdateOrder::Synchronous;
  CHECK(hopfield_step(net, v, sync) == v);
}

TEST_CASE("exact Boltzmann distribution", "[spin]") {
  const SpinNetwork flat = {Matrix(3, 3), Vector(3, 0.0)};
  for (double q : boltzmann_exact_distribution(flat)) CHECK(q == Approx(0.125).epsilon(1e-15));

  const SpinNetwork single = {Matrix(1, 1), Vector{-2.0}};
  const Vector p = boltzmann_exact_distribution(single);
  CHECK(p[1] == Approx(std::exp(2.0) / (1.0 + std::exp(2.0))).epsilon(1e-14));

  SeededRng rng(12);
  for (std::size_t M = 1; M <= 8; ++M) {
    const Vector q = boltzmann_exact_distribution(random_network(M, rng));
    double s = 0.0;
    for (double x : q) s += x;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }

  // State order: v_1 is the most significant bit.
  CHECK(state_index({1, 0, 0}) == 4);
  CHECK(state_from_index(6, 3) == BinaryState{1, 1, 0});
  CHECK(distribution_table(p).header() == std::vector<std::string>{"state_index", "probability"});

  CHECK_THROWS_AS(boltzmann_exact_distribution({Matrix(21, 21), Vector(21, 0.0)}), CapacityError);
}

TEST_CASE("energy shift leaves the distribution unchanged", "[spin]") {
  SeededRng rng(2);
  const SpinNetwork net = random_network(4, rng);
  Vector H(16), shifted(16);
  for (std::size_t k = 0; k < 16; ++k) {
    H[k] = energy(net, state_from_index(k, 4));
    shifted[k] = H[k] + 37.5;
  }
  const Vector a = gibbs_weights(H), b = gibbs_weights(shifted);
  for (std::size_t k = 0; k < 16; ++k) CHECK(a[k] == Approx(b[k]).epsilon(1e-13));
}

TEST_CASE("detailed balance decides the sign convention", "[spin]") {
  SeededRng rng(31);
  for (std::size_t M = 1; M <= 6; ++M) {
    for (int trial = 0; trial < 5; ++trial) {
      const SpinNetwork net = random_network(M, rng);
      CHECK(detailed_balance_violation(net, SignConvention::Balanced) <= 1e-12);
    }
  }
  CHECK(detailed_balance_violation(ferromagnet(), SignConvention::Literal) > 1e-3);
  // Without couplings the two conventions coincide.
  CHECK(detailed_balance_violation({Matrix(3, 3), Vector{0.5, -1.0, 2.0}}, SignConvention::Literal) <= 1e-12);
}

TEST_CASE("Glauber chain reaches the Boltzmann distribution", "[spin]") {
  SeededRng rng(17);
  const auto flat = gibbs_stationary_check({Matrix(3, 3), Vector(3, 0.0)}, 1000000, 1000, rng);
  CHECK(flat.tv_distance <= 0.01);

  SeededRng rng2(18);
  const auto ferro = gibbs_stationary_check(ferromagnet(), 1000000, 1000, rng2);
  CHECK(ferro.tv_distance <= 0.02);
  CHECK(ferro.monte_carlo_error > 0.0);

  SeededRng rng3(19);
  const auto none = gibbs_stationary_check(ferromagnet(), 0, 10, rng3);
  CHECK(none.low_confidence);
  CHECK(none.samples == 1);
}

TEST_CASE("TV distance shrinks with chain length", "[spin]") {
  const SpinNetwork net = ferromagnet();
  int decreases = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeededRng a(seed), b(seed);
    const double short_tv = gibbs_stationary_check(net, 100000, 100, a).tv_distance;
    const double long_tv = gibbs_stationary_check(net, 1000000, 100, b).tv_distance;
    if (long_tv < short_tv) ++decreases;
  }
  CHECK(decreases > 5);
  const auto trace = gibbs_tv_trace(net, {1000, 100000}, 100, SeededRng(5));
  CHECK(trace.row_count() == 2);
}

TEST_CASE("KL objective", "[spin]") {
  SeededRng rng(8);
  const SpinNetwork net = random_network(5, rng);
  CHECK(kl_objective(visible_marginal(net, 3), net, 3) <= 1e-12);
  CHECK(kl_objective(boltzmann_exact_distribution(net), net, 5) <= 1e-12);

  const Vector point(32, 1.0 / 32.0);
  CHECK(kl_objective(point, net, 5) == Approx(kl_divergence(point, boltzmann_exact_distribution(net))));

  const SpinNetwork flat = {Matrix(2, 2), Vector{0.0, 0.0}};
  CHECK(kl_objective({1.0, 0.0}, flat, 1) == Approx(std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(kl_objective({1.0, 0.0, 0.0}, flat, 1), DimensionError);
}
