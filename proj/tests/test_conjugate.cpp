#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "msorte/conjugate.hpp"

using namespace msorte;
using test_helpers::exp_pairwise;
using test_helpers::sum_exp;

TEST_CASE("analytic conjugate matches the numeric inner maximization") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> wdraw(0.05, 5.0);
  for (int n : {2, 3, 4}) {
    Vector alpha = test_helpers::random_alpha(rng, n);
    for (auto u : {exp_pairwise(alpha), sum_exp(alpha)}) {
      for (int trial = 0; trial < 100; ++trial) {
        Vector w(n);
        for (int j = 0; j < n; ++j) w[j] = wdraw(rng);
        double analytic = conjugate_eval_analytic(u, w);
        auto numeric = conjugate_eval_numeric(u, w);
        CHECK(numeric.attained);
        CHECK(analytic == doctest::Approx(numeric.value).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("reference conjugate value for the symmetric pair") {
  // N=2, alpha=(1,1), w=(1,1): inner stationary point gives 1 - log 2
  auto u = exp_pairwise(Vector::Ones(2));
  CHECK(conjugate_eval(u, Vector::Ones(2)) == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("Fenchel inequality holds on random pairs") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> wdraw(0.01, 4.0);
  const int n = 3;
  Vector alpha = test_helpers::random_alpha(rng, n);
  for (auto u : {exp_pairwise(alpha), sum_exp(alpha)}) {
    for (int trial = 0; trial < 500; ++trial) {
      Vector x = test_helpers::random_endowments(rng, n, 1, -3.0, 3.0).col(0);
      Vector w(n);
      for (int j = 0; j < n; ++j) w[j] = wdraw(rng);
      CHECK(evaluate(u, x) <= x.dot(w) + conjugate_eval(u, w) + 1e-9);
    }
  }
}

TEST_CASE("zero weight gives the utility sup") {
  std::mt19937_64 rng(23);
  Vector alpha = test_helpers::random_alpha(rng, 3);
  for (auto u : {exp_pairwise(alpha), sum_exp(alpha)}) {
    CHECK(conjugate_diag(u, 0.0) == doctest::Approx(sup_value(u)));
    auto r = conjugate_eval_numeric(u, Vector::Zero(3));
    CHECK_FALSE(r.attained);
    CHECK(r.value == doctest::Approx(sup_value(u)));
  }
}

TEST_CASE("numeric route covers the aggregator families") {
  std::mt19937_64 rng(24);
  const int n = 2;
  UtilitySpec u;
  u.family = UtilityFamily::SumPlusAgg;
  u.alpha = test_helpers::random_alpha(rng, n);
  u.beta_weights = Vector::Constant(n, 0.4);
  u.agg = {AggregatorKind::Exponential, 0.8};
  std::uniform_real_distribution<double> wdraw(0.2, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    Vector w(n);
    for (int j = 0; j < n; ++j) w[j] = wdraw(rng);
    auto r = conjugate_eval_numeric(u, w);
    CHECK(r.attained);
    // the maximizer is stationary: grad U = w
    Vector g = gradient(u, r.maximizer);
    CHECK((g - w).cwiseAbs().maxCoeff() < 1e-8);
    // and the value dominates random Fenchel samples
    for (int s = 0; s < 20; ++s) {
      Vector x = test_helpers::random_endowments(rng, n, 1).col(0);
      CHECK(r.value >= evaluate(u, x) - x.dot(w) - 1e-9);
    }
  }
}

TEST_CASE("diagonal derivative and curvature against finite differences") {
  std::mt19937_64 rng(25);
  const int n = 3;
  Vector alpha = test_helpers::random_alpha(rng, n);
  UtilitySpec agg;
  agg.family = UtilityFamily::SumPlusAgg;
  agg.alpha = alpha;
  agg.beta_weights = Vector::Constant(n, 0.3);
  agg.agg = {AggregatorKind::Rational, 2.0};
  for (auto u : {exp_pairwise(alpha), sum_exp(alpha), agg}) {
    for (double z : {0.2, 0.7, 1.0, 2.5, 6.0}) {
      const double h = 1e-5 * z;
      double fd = (conjugate_diag(u, z + h) - conjugate_diag(u, z - h)) / (2.0 * h);
      CHECK(conjugate_diag_derivative(u, z) == doctest::Approx(fd).epsilon(1e-5));
      double fd2 =
          (conjugate_diag_derivative(u, z + h) - conjugate_diag_derivative(u, z - h)) / (2.0 * h);
      CHECK(conjugate_diag_curvature(u, z) == doctest::Approx(fd2).epsilon(1e-4));
      CHECK(conjugate_diag_curvature(u, z) > 0.0);  // strict convexity on the diagonal
    }
  }
}

TEST_CASE("weight validation") {
  auto u = sum_exp(Vector::Ones(2));
  Vector w(2);
  w << 1.0, -0.5;
  CHECK_THROWS_AS(conjugate_eval_numeric(u, w), InputError);
  CHECK_THROWS_AS(conjugate_eval(u, Vector::Ones(3)), InputError);
  CHECK_THROWS_AS(conjugate_diag(u, -1.0), InputError);
}
