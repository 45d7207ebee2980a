#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "msorte/exponential_oracle.hpp"
#include "msorte/solver.hpp"

using namespace msorte;

TEST_CASE("oracle density normalizes and is positive") {
  std::mt19937_64 rng(61);
  auto space = test_helpers::random_space(rng, 6);
  Allocation X(test_helpers::random_endowments(rng, 3, 6));
  ExponentialInstance inst(test_helpers::random_alpha(rng, 3), X, 0.4);
  auto q = oracle_density(inst, space);
  CHECK(q.equivalent());
  for (int j = 0; j < 3; ++j) {
    double mass = 0.0;
    for (int w = 0; w < 6; ++w) mass += space.prob(w) * q(j, w);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }
  // rows identical
  CHECK((q.densities().row(0) - q.densities().row(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("deterministic aggregate gives the flat density") {
  Vector p(3);
  p << 0.2, 0.3, 0.5;
  ScenarioSpace space({"a", "b", "c"}, p);
  Matrix x(2, 3);
  x << 0.4, -1.0, 2.0,
      -0.4, 1.0, -2.0;  // xbar = 0 in every scenario
  ExponentialInstance inst(Vector::Ones(2), Allocation(x), 0.0);
  auto q = oracle_density(inst, space);
  CHECK((q.densities().array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("oracle density depends on X only through the aggregate") {
  std::mt19937_64 rng(62);
  auto space = test_helpers::random_space(rng, 5);
  Matrix x = test_helpers::random_endowments(rng, 3, 5);
  Matrix x2 = x;
  x2.row(0) += Vector::Constant(5, 0.7).transpose();
  x2.row(1) -= Vector::Constant(5, 0.7).transpose();  // same xbar
  Vector alpha = test_helpers::random_alpha(rng, 3);
  auto q1 = oracle_density(ExponentialInstance(alpha, Allocation(x), 0.1), space);
  auto q2 = oracle_density(ExponentialInstance(alpha, Allocation(x2), 0.1), space);
  CHECK((q1.densities() - q2.densities()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("oracle allocation clears the budget exactly") {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    Allocation X(test_helpers::random_endowments(rng, n, 4));
    double A = (trial % 5) * 0.3 - 0.6;
    ExponentialInstance inst(test_helpers::random_alpha(rng, n), X, A);
    auto Y = oracle_allocation(inst);
    for (int w = 0; w < 4; ++w)
      CHECK(Y.values().col(w).sum() == doctest::Approx(A).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("log-space tilt survives extreme aggregates") {
  Vector p(2);
  p << 0.5, 0.5;
  ScenarioSpace space({"a", "b"}, p);
  Matrix x(2, 2);
  x << 400.0, -400.0, 300.0, -300.0;
  ExponentialInstance inst(Vector::Ones(2), Allocation(x), 0.0);
  auto q = oracle_density(inst, space);
  CHECK(q.densities().allFinite());
  CHECK(q.densities().minCoeff() >= 0.0);
  double mass = 0.5 * q(0, 0) + 0.5 * q(0, 1);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lambda shift covariance between budget and endowment") {
  std::mt19937_64 rng(64);
  auto space = test_helpers::random_space(rng, 4);
  const int n = 3;
  Matrix x = test_helpers::random_endowments(rng, n, 4);
  Vector alpha = test_helpers::random_alpha(rng, n);
  const double A = 0.8;
  Vector a(n);
  a << 0.3, 0.1, 0.4;
  double lamA = oracle_lambda(ExponentialInstance(alpha, Allocation(x), A), space);
  Matrix shifted = x;
  for (int j = 0; j < n; ++j) shifted.row(j).array() += a[j];
  double lam0 = oracle_lambda(ExponentialInstance(alpha, Allocation(shifted), 0.0), space);
  CHECK(lamA == doctest::Approx(lam0).epsilon(1e-12));
}

TEST_CASE("self validation arbitrates the scale constant") {
  auto rep = self_validate(1);
  for (const auto& line : rep.log) INFO(line);
  CHECK(rep.pass);
  CHECK(rep.enabled);
  CHECK(rep.adopted == "corrected");
  CHECK(rep.max_kkt_residual <= 1e-9);
  CHECK(rep.max_density_residual <= 1e-8);
  CHECK(rep.max_lambda_relative <= 1e-8);
}

TEST_CASE("oracle agrees with the generic solver") {
  std::mt19937_64 rng(65);
  SolverConfig cfg;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 2 + trial % 2;
    auto space = test_helpers::random_space(rng, 5);
    Allocation X(test_helpers::random_endowments(rng, n, 5));
    Vector alpha = test_helpers::random_alpha(rng, n);
    double A = trial * 0.25 - 0.5;
    ExponentialInstance inst(alpha, X, A);
    auto u = test_helpers::exp_pairwise(alpha);
    auto p = solve_primal(space, X, u, BudgetSpec{A}, ClusterPartition::single(n), cfg);
    CHECK((p.Y_hat.values() - oracle_allocation(inst).values()).cwiseAbs().maxCoeff() < 1e-7);
    auto d = solve_dual(space, X, u, BudgetSpec{A}, ClusterPartition::single(n), cfg);
    CHECK((d.Q_hat.densities() - oracle_density(inst, space).densities())
              .cwiseAbs()
              .maxCoeff() < 1e-8);
    CHECK(d.lambda_hat == doctest::Approx(oracle_lambda(inst, space)).epsilon(1e-8));
  }
}

TEST_CASE("instance validation") {
  Allocation X(Matrix::Zero(2, 2));
  Vector bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(ExponentialInstance(bad, X, 0.0), InputError);
  CHECK_THROWS_AS(ExponentialInstance(Vector::Ones(3), X, 0.0), InputError);
}
