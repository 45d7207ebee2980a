#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "msorte/utility.hpp"

using namespace msorte;
using test_helpers::exp_pairwise;
using test_helpers::sum_exp;

namespace {

UtilitySpec sum_plus_agg(Vector alpha, Vector beta, AggregatorKind kind, double p) {
  UtilitySpec u;
  u.family = UtilityFamily::SumPlusAgg;
  u.alpha = std::move(alpha);
  u.beta_weights = std::move(beta);
  u.agg = {kind, p};
  return u;
}

UtilitySpec kink_family(Vector alpha, Vector gamma, Vector kink, double exponent) {
  UtilitySpec u;
  u.family = UtilityFamily::SumExpKink;
  u.alpha = std::move(alpha);
  u.gamma = std::move(gamma);
  u.kink = std::move(kink);
  u.exponent = exponent;
  return u;
}

std::vector<UtilitySpec> smooth_menu(std::mt19937_64& rng, int n) {
  Vector alpha = test_helpers::random_alpha(rng, n);
  Vector beta = test_helpers::random_alpha(rng, n, 0.1, 1.0);
  return {
      exp_pairwise(alpha),
      sum_exp(alpha),
      sum_plus_agg(alpha, beta, AggregatorKind::Exponential, 0.7),
      sum_plus_agg(alpha, beta, AggregatorKind::Rational, 1.8),
      sum_plus_agg(alpha, beta, AggregatorKind::Arctan, 2.3),
  };
}

}  // namespace

TEST_CASE("pairwise form equals the compact exponential formula") {
  std::mt19937_64 rng(3);
  const int n = 4;
  Vector alpha = test_helpers::random_alpha(rng, n);
  auto u = exp_pairwise(alpha);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x = test_helpers::random_endowments(rng, n, 1).col(0);
    double pairwise = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        pairwise += 1.0 - std::exp(-(alpha[i] * x[i] + alpha[j] * x[j]));
    pairwise /= 2.0;
    CHECK(evaluate(u, x) == doctest::Approx(pairwise).epsilon(1e-12));
  }
}

TEST_CASE("gradients match finite differences") {
  std::mt19937_64 rng(5);
  const int n = 3;
  for (auto& u : smooth_menu(rng, n)) {
    for (int trial = 0; trial < 20; ++trial) {
      Vector x = test_helpers::random_endowments(rng, n, 1).col(0);
      Vector g = gradient(u, x);
      const double h = 1e-6;
      for (int j = 0; j < n; ++j) {
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        double fd = (evaluate(u, xp) - evaluate(u, xm)) / (2.0 * h);
        CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
        CHECK(g[j] > 0.0);  // strict monotonicity
      }
      Matrix H = hessian(u, x);
      CHECK((H - H.transpose()).norm() < 1e-12);
      for (int j = 0; j < n; ++j) {
        Vector xp = x;
        xp[j] += h;
        Vector gd = (gradient(u, xp) - gradient(u, x)) / h;
        for (int k = 0; k < n; ++k)
          CHECK(H(j, k) == doctest::Approx(gd[k]).epsilon(2e-4).scale(1.0));
      }
    }
  }
}

TEST_CASE("concavity along random chords") {
  std::mt19937_64 rng(7);
  const int n = 3;
  auto menu = smooth_menu(rng, n);
  menu.push_back(kink_family(test_helpers::random_alpha(rng, n), Vector::Constant(n, 0.5),
                             Vector::Zero(n), 1.5));
  for (auto& u : menu) {
    for (int trial = 0; trial < 200; ++trial) {
      Vector x = test_helpers::random_endowments(rng, n, 1).col(0);
      Vector y = test_helpers::random_endowments(rng, n, 1).col(0);
      double mid = evaluate(u, ((x + y) / 2.0).eval());
      double chord = 0.5 * (evaluate(u, x) + evaluate(u, y));
      CHECK(mid >= chord - 1e-12);
    }
  }
}

TEST_CASE("sup values and overflow sentinel") {
  std::mt19937_64 rng(9);
  Vector alpha = test_helpers::random_alpha(rng, 3);
  CHECK(sup_value(exp_pairwise(alpha)) == doctest::Approx(4.5));
  CHECK(sup_value(sum_exp(alpha)) == doctest::Approx(3.0));
  auto agg = sum_plus_agg(alpha, Vector::Ones(3), AggregatorKind::Arctan, 2.0);
  CHECK(sup_value(agg) == doctest::Approx(3.0 + M_PI));

  // far below the kink / deep negative: -inf sentinel, no NaN
  bool overflowed = false;
  double v = evaluate(exp_pairwise(alpha), Vector::Constant(3, -1e4), &overflowed);
  CHECK(overflowed);
  CHECK(v == -std::numeric_limits<double>::infinity());
  overflowed = false;
  evaluate(exp_pairwise(alpha), Vector::Zero(3), &overflowed);
  CHECK_FALSE(overflowed);
}

TEST_CASE("kink family differentiability boundary") {
  Vector alpha = Vector::Ones(2), gamma = Vector::Ones(2), kink = Vector::Zero(2);
  auto u = kink_family(alpha, gamma, kink, 1.0);
  CHECK_THROWS_AS(gradient(u, Vector::Zero(2)), NondifferentiableError);
  CHECK_THROWS_AS(hessian(u, Vector::Ones(2)), NondifferentiableError);
  // away from the kink both branches are smooth
  Vector below = Vector::Constant(2, -0.5);
  Vector g = gradient(u, below);
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Vector xp = below, xm = below;
    xp[j] += h;
    xm[j] -= h;
    CHECK(g[j] == doctest::Approx((evaluate(u, xp) - evaluate(u, xm)) / (2 * h)).epsilon(1e-5));
  }
  // exponent > 1 makes the kink hyperplane smooth from the zero side
  auto u2 = kink_family(alpha, gamma, kink, 2.0);
  CHECK_NOTHROW(gradient(u2, Vector::Zero(2)));
}

TEST_CASE("validation rejects bad parameters") {
  auto u = sum_exp(Vector::Constant(2, -1.0));
  auto rep = validate(u);
  CHECK_FALSE(rep.valid);
  CHECK(rep.violations.size() == 2);

  auto good = sum_exp(Vector::Ones(2));
  rep = validate(good);
  CHECK(rep.valid);
  CHECK(rep.well_controlled);
  CHECK(rep.integrability == "verified");
  CHECK(rep.uniqueness_applicable);

  auto agg = sum_plus_agg(Vector::Ones(2), Vector::Ones(2), AggregatorKind::Rational, 1.0);
  CHECK_FALSE(validate(agg).valid);  // rational needs p > 1
  agg.agg.p = 1.5;
  CHECK(validate(agg).valid);

  auto k = kink_family(Vector::Ones(2), Vector::Ones(2), Vector::Zero(2), 0.5);
  CHECK_FALSE(validate(k).valid);
  k.exponent = 1.0;
  auto krep = validate(k);
  CHECK(krep.valid);
  CHECK_FALSE(krep.smoothness.differentiable);
  CHECK_FALSE(krep.uniqueness_applicable);
}

TEST_CASE("family names round trip") {
  for (auto fam : {UtilityFamily::ExpPairwise, UtilityFamily::SumExp, UtilityFamily::SumPlusAgg,
                   UtilityFamily::SumExpKink})
    CHECK(family_from_name(family_name(fam)) == fam);
  CHECK_THROWS_AS(family_from_name("QUADRATIC"), InputError);
}
