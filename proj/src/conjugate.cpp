#include "msorte/conjugate.hpp"

#include <cmath>
#include <random>

#include "msorte/optim.hpp"

namespace msorte {

namespace {

constexpr double kZeroWeight = 1e-14;

double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

/// Pin position for a coordinate whose dual weight vanishes: far enough out
/// that every exponential term is ~0 and any kink penalty is inactive.
double pin_position(const UtilitySpec& spec, int j) {
  double x = 40.0 / spec.alpha[j];
  if (spec.family == UtilityFamily::SumExpKink) x = std::max(x, spec.kink[j] + 1.0);
  return x;
}

ConjugateResult inner_max_smooth(const UtilitySpec& spec, const Vector& w, std::uint64_t seed) {
  const int n = spec.agents();
  std::vector<int> active;
  Vector pinned(n);
  for (int j = 0; j < n; ++j) {
    if (w[j] > kZeroWeight) active.push_back(j);
    pinned[j] = pin_position(spec, j);
  }
  const int na = static_cast<int>(active.size());

  ConjugateResult res;
  res.attained = (na == n);
  if (na == 0) {
    res.maximizer = pinned;
    res.value = sup_value(spec);
    return res;
  }

  auto embed = [&](const Vector& t) {
    Vector x = pinned;
    for (int i = 0; i < na; ++i) x[active[i]] = t[i];
    return x;
  };
  auto f = [&](const Vector& t) {
    Vector x = embed(t);
    double u = evaluate(spec, x);
    for (int i = 0; i < na; ++i) u -= w[active[i]] * t[i];
    return u;
  };
  auto g = [&](const Vector& t) {
    Vector full = gradient(spec, embed(t));
    Vector out(na);
    for (int i = 0; i < na; ++i) out[i] = full[active[i]] - w[active[i]];
    return out;
  };
  auto h = [&](const Vector& t) {
    Matrix full = hessian(spec, embed(t));
    Matrix out(na, na);
    for (int i = 0; i < na; ++i)
      for (int k = 0; k < na; ++k) out(i, k) = full(active[i], active[k]);
    return out;
  };

  // start near the known stationary structure of the exponential families
  Vector t0(na);
  for (int i = 0; i < na; ++i) {
    int j = active[i];
    t0[i] = std::log(spec.alpha[j] * n / std::max(w[j], 1e-12)) / spec.alpha[j];
  }
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> noise(0.0, 1.0);

  optim::NewtonResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 3; ++attempt) {
    Vector start = t0;
    if (attempt > 0)
      for (int i = 0; i < na; ++i) start[i] += noise(rng);
    auto r = optim::newton_maximize(f, g, h, start, 1e-12, 200);
    if (r.value > best.value || (r.converged && !best.converged)) best = r;
    if (best.converged) break;
  }
  res.value = best.value;
  res.maximizer = embed(best.x);
  return res;
}

ConjugateResult inner_max_kink(const UtilitySpec& spec, const Vector& w) {
  const int n = spec.agents();
  std::vector<int> active;
  Vector pinned(n);
  for (int j = 0; j < n; ++j) {
    if (w[j] > kZeroWeight) active.push_back(j);
    pinned[j] = pin_position(spec, j);
  }
  const int na = static_cast<int>(active.size());
  ConjugateResult res;
  res.attained = (na == n);
  if (na == 0) {
    res.maximizer = pinned;
    res.value = sup_value(spec);
    return res;
  }
  auto f = [&](const Vector& t) {
    Vector x = pinned;
    for (int i = 0; i < na; ++i) x[active[i]] = t[i];
    double u = evaluate(spec, x);
    for (int i = 0; i < na; ++i) u -= w[active[i]] * t[i];
    return u;
  };
  // the smooth SumExp stationary point ignoring the penalty
  Vector t0(na);
  for (int i = 0; i < na; ++i) {
    int j = active[i];
    t0[i] = -std::log(std::max(w[j], 1e-12) / spec.alpha[j]) / spec.alpha[j];
  }
  auto r = optim::nelder_mead_maximize(f, t0, 0.5, 1e-13, 4000);
  res.value = r.value;
  res.maximizer = pinned;
  for (int i = 0; i < na; ++i) res.maximizer[active[i]] = r.x[i];
  return res;
}

void check_weights(const UtilitySpec& spec, const Vector& w) {
  if (w.size() != spec.agents()) throw InputError("conjugate: weight dimension mismatch");
  for (int j = 0; j < w.size(); ++j)
    if (!std::isfinite(w[j]) || w[j] < 0.0)
      throw InputError("conjugate: weights must be finite and nonnegative");
}

}  // namespace

ConjugateResult conjugate_eval_numeric(const UtilitySpec& spec, const Vector& w,
                                       std::uint64_t seed) {
  check_weights(spec, w);
  if (smoothness(spec).differentiable) return inner_max_smooth(spec, w, seed);
  return inner_max_kink(spec, w);
}

bool has_analytic_conjugate(const UtilitySpec& spec) {
  return spec.family == UtilityFamily::ExpPairwise || spec.family == UtilityFamily::SumExp;
}

double conjugate_eval_analytic(const UtilitySpec& spec, const Vector& w) {
  check_weights(spec, w);
  const int n = spec.agents();
  switch (spec.family) {
    case UtilityFamily::ExpPairwise: {
      // stationary point: e^{-alpha_j x_j} = (w_j/alpha_j)/sqrt(T), T = sum w_j/alpha_j
      double T = 0.0;
      double sum_logs = 0.0;
      for (int j = 0; j < n; ++j) {
        double r = w[j] / spec.alpha[j];
        T += r;
        sum_logs += xlogx(r);
      }
      return 0.5 * n * n - 0.5 * T + sum_logs - 0.5 * xlogx(T);
    }
    case UtilityFamily::SumExp: {
      double v = 0.0;
      for (int j = 0; j < n; ++j) {
        double r = w[j] / spec.alpha[j];
        v += 1.0 - r + xlogx(r);
      }
      return v;
    }
    default:
      throw InputError("no closed-form conjugate for family " + family_name(spec.family));
  }
}

double conjugate_eval(const UtilitySpec& spec, const Vector& w) {
  if (has_analytic_conjugate(spec)) return conjugate_eval_analytic(spec, w);
  return conjugate_eval_numeric(spec, w).value;
}

double conjugate_diag(const UtilitySpec& spec, double z) {
  if (!(z >= 0.0)) throw InputError("conjugate_diag: z must be >= 0");
  if (z == 0.0) return sup_value(spec);
  return conjugate_eval(spec, Vector::Constant(spec.agents(), z));
}

double conjugate_diag_derivative(const UtilitySpec& spec, double z) {
  if (!(z > 0.0)) throw InputError("conjugate_diag_derivative: z must be > 0");
  const int n = spec.agents();
  switch (spec.family) {
    case UtilityFamily::ExpPairwise: {
      double beta = 0.0, Gamma = 0.0;
      for (int j = 0; j < n; ++j) {
        beta += 1.0 / spec.alpha[j];
        Gamma += std::log(1.0 / spec.alpha[j]) / spec.alpha[j];
      }
      return Gamma - 0.5 * beta * std::log(beta) + 0.5 * beta * std::log(z);
    }
    case UtilityFamily::SumExp: {
      double beta = 0.0, Gamma = 0.0;
      for (int j = 0; j < n; ++j) {
        beta += 1.0 / spec.alpha[j];
        Gamma += std::log(1.0 / spec.alpha[j]) / spec.alpha[j];
      }
      return beta * std::log(z) + Gamma;
    }
    default: {
      // envelope route: d/dz V(z*1) = -sum_j x*_j at the inner maximizer
      auto r = conjugate_eval_numeric(spec, Vector::Constant(n, z));
      return -r.maximizer.sum();
    }
  }
}

double conjugate_diag_curvature(const UtilitySpec& spec, double z) {
  if (!(z > 0.0)) throw InputError("conjugate_diag_curvature: z must be > 0");
  const int n = spec.agents();
  double beta = 0.0;
  for (int j = 0; j < n; ++j) beta += 1.0 / spec.alpha[j];
  switch (spec.family) {
    case UtilityFamily::ExpPairwise: return 0.5 * beta / z;
    case UtilityFamily::SumExp: return beta / z;
    default: {
      double h = std::max(1e-6 * z, 1e-10);
      return (conjugate_diag_derivative(spec, z + h) - conjugate_diag_derivative(spec, z - h)) /
             (2.0 * h);
    }
  }
}

}  // namespace msorte
