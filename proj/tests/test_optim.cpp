#include <doctest.h>

#include <cmath>

#include "msorte/optim.hpp"

using namespace msorte::optim;

TEST_CASE("log_sum_exp is shift stable") {
  Vector a(3);
  a << 1000.0, 1000.0 + std::log(2.0), 999.0;
  double expected = 1000.0 + std::log(1.0 + 2.0 + std::exp(-1.0));
  CHECK(log_sum_exp(a) == doctest::Approx(expected).epsilon(1e-14));
  Vector b(2);
  b << -1e308, -1e308;
  CHECK(log_sum_exp(b) < 0.0);  // no NaN from the -inf-ish regime
}

TEST_CASE("newton maximizes a shifted quadratic") {
  Matrix A(2, 2);
  A << 3.0, 1.0, 1.0, 2.0;
  Vector b(2);
  b << 1.0, -2.0;
  auto f = [&](const Vector& x) { return (b.dot(x) - 0.5 * x.dot(A * x)); };
  auto g = [&](const Vector& x) { return (b - A * x).eval(); };
  auto h = [&](const Vector& x) { (void)x; return (-A).eval(); };
  auto r = newton_maximize(f, g, h, Vector::Zero(2), 1e-12, 50);
  CHECK(r.converged);
  Vector expected = A.ldlt().solve(b);
  CHECK((r.x - expected).norm() < 1e-10);
}

TEST_CASE("increasing root with floor detection") {
  auto f = [](double z) { return std::log(z) + 2.0; };
  auto df = [](double z) { return 1.0 / z; };
  auto r = increasing_root(f, df, 1.0, 1e-14, 1e-13, 100);
  CHECK(r.converged);
  CHECK(r.x == doctest::Approx(std::exp(-2.0)).epsilon(1e-10));
  CHECK_FALSE(r.hit_floor);

  // root below the floor: flagged, clamped
  auto g = [](double z) { return z + 1.0; };
  auto dg = [](double) { return 1.0; };
  auto r2 = increasing_root(g, dg, 1.0, 1e-14, 1e-13, 100);
  CHECK(r2.hit_floor);
}

TEST_CASE("decreasing root over the real line") {
  auto f = [](double t) { return std::exp(-t) - 3.0; };
  auto r = decreasing_root(f, 5.0, 1e-12, 300);
  CHECK(r.converged);
  CHECK(r.x == doctest::Approx(-std::log(3.0)).epsilon(1e-8));
}

TEST_CASE("golden section minimum") {
  auto f = [](double x) { return (x - 1.7) * (x - 1.7) + 0.5; };
  double x = golden_section_minimize(f, -10.0, 10.0, 1e-10);
  CHECK(x == doctest::Approx(1.7).epsilon(1e-7));
}

TEST_CASE("nelder mead maximizes a nonsmooth concave function") {
  auto f = [](const Vector& x) {
    return -(std::abs(x[0] - 0.3) + 2.0 * std::abs(x[1] + 0.4)) - 0.1 * x.squaredNorm();
  };
  auto r = nelder_mead_maximize(f, Vector::Zero(2), 0.5, 1e-14, 4000);
  CHECK(std::abs(r.x[0] - 0.3) < 1e-5);
  CHECK(std::abs(r.x[1] + 0.4) < 1e-5);
}
