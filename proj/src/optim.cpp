#include "msorte/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msorte::optim {

double log_sum_exp(const Vector& args) {
  double m = args.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < args.size(); ++i) s += std::exp(args[i] - m);
  return m + std::log(s);
}

NewtonResult newton_maximize(const std::function<double(const Vector&)>& f,
                             const std::function<Vector(const Vector&)>& grad,
                             const std::function<Matrix(const Vector&)>& hess,
                             Vector x0, double grad_tol, int max_iter) {
  NewtonResult res;
  res.x = std::move(x0);
  double fx = f(res.x);
  for (int it = 0; it < max_iter; ++it) {
    Vector g = grad(res.x);
    res.grad_norm = g.norm();
    res.iterations = it;
    if (res.grad_norm <= grad_tol) {
      res.converged = true;
      break;
    }
    Matrix H = hess(res.x);
    Vector d;
    Eigen::LDLT<Matrix> ldlt(-H);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      d = ldlt.solve(g);
    } else {
      d = g;  // Hessian unusable, fall back to steepest ascent
    }
    if (!d.allFinite() || d.dot(g) <= 0.0) d = g;
    // cap enormous steps so the line search starts in a sane region
    double dn = d.norm();
    if (dn > 1e8) d *= 1e8 / dn;
    double t = 1.0;
    double slope = d.dot(g);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      Vector xt = res.x + t * d;
      double ft = f(xt);
      if (std::isfinite(ft) && ft > fx && ft >= fx + 1e-4 * t * slope) {
        res.x = std::move(xt);
        fx = ft;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // objective improvements fell below double resolution; the pure Newton
      // step still contracts the gradient near the optimum
      Vector xt = res.x + d;
      double ft = f(xt);
      if (std::isfinite(ft) && grad(xt).norm() < res.grad_norm) {
        res.x = std::move(xt);
        fx = ft;
      } else {
        break;
      }
    }
  }
  res.value = fx;
  if (!res.converged) {
    Vector g = grad(res.x);
    res.grad_norm = g.norm();
    res.converged = res.grad_norm <= grad_tol;
  }
  return res;
}

ScalarRootResult increasing_root(const std::function<double(double)>& f,
                                 const std::function<double(double)>& deriv,
                                 double x0, double floor, double tol, int max_iter) {
  ScalarRootResult res;
  double lo = std::max(x0, floor * 2.0);
  double hi = lo;
  double flo = f(lo);
  double fhi = flo;
  int guard = 0;
  while (flo > 0.0 && guard++ < 2000) {
    hi = lo;
    fhi = flo;
    lo *= 0.5;
    if (lo <= floor) {
      res.hit_floor = true;
      res.x = floor;
      return res;
    }
    flo = f(lo);
  }
  guard = 0;
  while (fhi < 0.0 && guard++ < 2000) {
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    if (!std::isfinite(hi) || hi > 1e300) {
      res.x = hi;
      return res;
    }
    fhi = f(hi);
  }
  // Newton polished against the [lo, hi] bracket
  double x = 0.5 * (lo + hi);
  double fx = f(x);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    if (std::abs(fx) <= tol) {
      res.converged = true;
      break;
    }
    if (fx > 0.0) hi = x; else lo = x;
    double d = deriv(x);
    double xn = (std::isfinite(d) && d > 0.0) ? x - fx / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (xn == x) {
      res.converged = true;
      break;
    }
    x = xn;
    fx = f(x);
  }
  res.x = x;
  res.fx = fx;
  if (!res.converged) res.converged = std::abs(fx) <= tol * 10.0;
  return res;
}

ScalarRootResult decreasing_root(const std::function<double(double)>& f, double x0, double tol,
                                 int max_iter) {
  ScalarRootResult res;
  double lo = x0, hi = x0;
  double flo = f(x0), fhi = flo;
  double step = 1.0;
  int guard = 0;
  while (flo < 0.0 && guard++ < 2000) {  // decreasing: f < 0 means root is left
    hi = lo;
    fhi = flo;
    lo -= step;
    step *= 2.0;
    flo = f(lo);
  }
  guard = 0;
  step = 1.0;
  while (fhi > 0.0 && guard++ < 2000) {
    lo = hi;
    flo = fhi;
    hi += step;
    step *= 2.0;
    fhi = f(hi);
  }
  double x = 0.5 * (lo + hi);
  double fx = f(x);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    if (std::abs(fx) <= tol || (hi - lo) <= tol * std::max(1.0, std::abs(x))) {
      res.converged = true;
      break;
    }
    if (fx > 0.0) lo = x; else hi = x;
    x = 0.5 * (lo + hi);
    fx = f(x);
  }
  res.x = x;
  res.fx = fx;
  return res;
}

double golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                               double tol, int max_iter) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

NewtonResult nelder_mead_maximize(const std::function<double(const Vector&)>& f, Vector x0,
                                  double initial_step, double tol, int max_iter) {
  const int n = static_cast<int>(x0.size());
  std::vector<Vector> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 1; i <= n; ++i) pts[i][i - 1] += initial_step;
  for (int i = 0; i <= n; ++i) vals[i] = -f(pts[i]);  // minimize -f

  auto order = [&] {
    for (int i = 0; i <= n; ++i)
      for (int k = i + 1; k <= n; ++k)
        if (vals[k] < vals[i]) {
          std::swap(vals[i], vals[k]);
          std::swap(pts[i], pts[k]);
        }
  };
  order();
  NewtonResult res;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    if (std::abs(vals[n] - vals[0]) <= tol * (1.0 + std::abs(vals[0]))) {
      res.converged = true;
      break;
    }
    Vector centroid = Vector::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;
    Vector xr = centroid + (centroid - pts[n]);
    double fr = -f(xr);
    if (fr < vals[0]) {
      Vector xe = centroid + 2.0 * (centroid - pts[n]);
      double fe = -f(xe);
      if (fe < fr) { pts[n] = xe; vals[n] = fe; } else { pts[n] = xr; vals[n] = fr; }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      Vector xc = centroid + 0.5 * (pts[n] - centroid);
      double fc = -f(xc);
      if (fc < vals[n]) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          vals[i] = -f(pts[i]);
        }
      }
    }
    order();
  }
  res.x = pts[0];
  res.value = -vals[0];
  return res;
}

}  // namespace msorte::optim
