#include "msorte/equilibrium.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>

#include "msorte/conjugate.hpp"
#include "msorte/optim.hpp"

namespace msorte {

namespace {

std::string fmt_residual(const char* name, double value) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s residual %.3e", name, value);
  return buf;
}

/// Best-response gain for one constrained scalar exchange: maximize
/// sum_w p_w phi_w(t_w) subject to <r, t> = 0 with r_w = p_w d_w, via the
/// stationarity system dphi_w(t_w) = mu d_w and a monotone outer solve in mu.
/// Derivatives dphi must be strictly decreasing (concavity).
double best_response_value(const std::function<double(int, double)>& phi,
                           const std::function<double(int, double)>& dphi, const Vector& probs,
                           const Vector& density, const Vector& t_current, int max_iter,
                           const std::function<double(int, double)>& dphi_inverse = nullptr) {
  const int m = static_cast<int>(probs.size());
  Vector t = t_current;
  auto inner = [&](double mu) {
    for (int w = 0; w < m; ++w) {
      double target = mu * density[w];
      if (dphi_inverse) {
        t[w] = dphi_inverse(w, target);
      } else {
        auto f = [&](double tw) { return dphi(w, tw) - target; };
        t[w] = optim::decreasing_root(f, t[w], 1e-12, max_iter).x;
      }
    }
    double s = 0.0;
    for (int w = 0; w < m; ++w) s += probs[w] * density[w] * t[w];
    return s;
  };
  double mu0 = 0.0;
  for (int w = 0; w < m; ++w) mu0 += probs[w] * dphi(w, t_current[w]);
  mu0 = std::max(mu0, 1e-300);
  auto outer = [&](double s) { return inner(std::exp(s)); };
  auto root = optim::decreasing_root(outer, std::log(mu0), 1e-13, max_iter);
  double mu = std::exp(root.x);
  double residual = inner(mu);
  double value = -mu * residual;  // first-order correction for the tiny constraint slack
  for (int w = 0; w < m; ++w) value += probs[w] * phi(w, t[w]);
  return value;
}

}  // namespace

EquilibriumTriple assemble(const PrimalSolution& p, const DualSolution& d,
                           const ScenarioSpace& space, const Allocation& X, const BudgetSpec& A) {
  Vector a = expectation(space, p.Y_hat, d.Q_hat);
  Matrix yt = p.Y_hat.values();
  for (int j = 0; j < yt.rows(); ++j) yt.row(j).array() -= a[j];
  EquilibriumTriple t{Allocation(yt), d.Q_hat, a, A};

  double budget_residual = std::abs(a.sum() - A.A);
  if (budget_residual > 1e-10)
    throw SolverError("assembly: " + fmt_residual("capital sum", budget_residual));
  double clearing = aggregate(t.Y_tilde).cwiseAbs().maxCoeff();
  if (clearing > 1e-10) throw SolverError("assembly: " + fmt_residual("clearing", clearing));
  double expect = expectation(space, t.Y_tilde, t.Q).cwiseAbs().maxCoeff();
  if (expect > 1e-8)
    throw SolverError("assembly: " + fmt_residual("exchange expectation", expect));
  return t;
}

double verify_nash(const EquilibriumTriple& t, const ScenarioSpace& space, const Allocation& X,
                   const UtilitySpec& U, const SolverConfig& cfg) {
  const int n = X.agents();
  const int m = space.size();
  Vector eq = expectation(space, t.Y_tilde, t.Q);

  // post-trade positions with every exchange row recentered under its own
  // pricing measure (the recentering is ~0 at an equilibrium)
  Matrix base(n, m);
  for (int j = 0; j < n; ++j)
    for (int w = 0; w < m; ++w) base(j, w) = t.a[j] + X(j, w) + t.Y_tilde(j, w) - eq[j];
  double current = 0.0;
  for (int w = 0; w < m; ++w) current += space.prob(w) * evaluate(U, base.col(w));

  const bool smooth = smoothness(U).differentiable;
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    Vector density = t.Q.densities().row(j);
    auto point = [&](int w, double tw) {
      Vector x = base.col(w);
      x[j] = t.a[j] + X(j, w) + tw;
      return x;
    };
    auto phi = [&](int w, double tw) { return evaluate(U, point(w, tw)); };
    auto dphi = [&](int w, double tw) {
      if (smooth) return gradient(U, point(w, tw))[j];
      const double h = 1e-7;
      return (evaluate(U, point(w, tw + h)) - evaluate(U, point(w, tw - h))) / (2.0 * h);
    };
    // closed-form inverses of dphi keep the check O(M) at large scale
    std::function<double(int, double)> dphi_inverse;
    if (U.family == UtilityFamily::SumExp) {
      dphi_inverse = [&, j](int w, double g) {
        return -std::log(g / U.alpha[j]) / U.alpha[j] - (t.a[j] + X(j, w));
      };
    } else if (U.family == UtilityFamily::ExpPairwise) {
      auto s_minus = std::make_shared<Vector>(m);
      for (int w = 0; w < m; ++w) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          if (i != j) s += std::exp(-U.alpha[i] * base(i, w));
        (*s_minus)[w] = s;
      }
      dphi_inverse = [&, j, s_minus](int w, double g) {
        // alpha_j e_j (s_minus + e_j) = g, quadratic in e_j = exp(-alpha_j x_j)
        double s = (*s_minus)[w];
        double ej = 0.5 * (-s + std::sqrt(s * s + 4.0 * g / U.alpha[j]));
        return -std::log(ej) / U.alpha[j] - (t.a[j] + X(j, w));
      };
    }
    Vector t0(m);
    for (int w = 0; w < m; ++w) t0[w] = t.Y_tilde(j, w) - eq[j];
    double best = best_response_value(phi, dphi, space.probs(), density, t0, cfg.max_iter,
                                      dphi_inverse);
    worst = std::max(worst, best - current);
  }
  return worst;
}

BuhlmannReport verify_buhlmann(const EquilibriumTriple& t, const ScenarioSpace& space,
                               const Allocation& X, const UtilitySpec& U,
                               const ClusterPartition& partition, const SolverConfig& cfg) {
  BuhlmannReport rep;
  rep.clearing_max = aggregate(t.Y_tilde).cwiseAbs().maxCoeff();

  const int m = space.size();
  for (int g = 0; g < partition.groups(); ++g) {
    const auto& grp = partition.group(g);
    for (int w = 0; w < m; ++w) {
      double lo = t.Q(grp[0], w), hi = lo;
      for (int j : grp) {
        lo = std::min(lo, t.Q(j, w));
        hi = std::max(hi, t.Q(j, w));
      }
      rep.density_spread_max = std::max(rep.density_spread_max, hi - lo);
    }
  }

  if (U.family == UtilityFamily::SumExp) {
    rep.alpha_checked = true;
    for (int j = 0; j < X.agents(); ++j) {
      Vector density = t.Q.densities().row(j);
      const double alpha = U.alpha[j];
      auto phi = [&](int w, double tw) {
        return 1.0 - std::exp(-alpha * (X(j, w) + t.a[j] + tw));
      };
      auto dphi = [&](int w, double tw) {
        return alpha * std::exp(-alpha * (X(j, w) + t.a[j] + tw));
      };
      auto dphi_inverse = [&, j, alpha](int w, double g) {
        return -std::log(g / alpha) / alpha - (X(j, w) + t.a[j]);
      };
      Vector t0 = t.Y_tilde.values().row(j);
      double current = 0.0;
      for (int w = 0; w < m; ++w) current += space.prob(w) * phi(w, t0[w]);
      double best = best_response_value(phi, dphi, space.probs(), density, t0, cfg.max_iter,
                                        dphi_inverse);
      rep.alpha_improvement = std::max(rep.alpha_improvement, best - current);
    }
  }
  return rep;
}

MeasurabilityReport verify_measurability(const EquilibriumTriple& t, const ScenarioSpace& space,
                                         const Allocation& X, const ClusterPartition& partition,
                                         bool differentiable) {
  MeasurabilityReport rep;
  if (partition.groups() != 1) {
    rep.reason = "skipped: nontrivial cluster partition";
    return rep;
  }
  if (!differentiable) {
    rep.reason = "skipped: nondifferentiable family";
    return rep;
  }
  rep.applicable = true;

  const int n = X.agents();
  const int m = space.size();
  Vector xbar = Vector::Zero(m);
  for (int j = 0; j < n; ++j) xbar += X.values().row(j);

  // level sets of the aggregate endowment, keyed on 12 rounded decimals
  std::map<std::string, std::vector<int>> levels;
  for (int w = 0; w < m; ++w) {
    char key[64];
    std::snprintf(key, sizeof(key), "%.12f", xbar[w]);
    levels[key].push_back(w);
  }
  for (const auto& [key, ws] : levels) {
    (void)key;
    for (int j = 0; j < n; ++j) {
      double dlo = t.Q(j, ws[0]), dhi = dlo;
      double plo = X(j, ws[0]) + t.a[j] + t.Y_tilde(j, ws[0]), phi_ = plo;
      for (int w : ws) {
        dlo = std::min(dlo, t.Q(j, w));
        dhi = std::max(dhi, t.Q(j, w));
        double pos = X(j, w) + t.a[j] + t.Y_tilde(j, w);
        plo = std::min(plo, pos);
        phi_ = std::max(phi_, pos);
      }
      rep.max_spread = std::max({rep.max_spread, dhi - dlo, phi_ - plo});
    }
  }
  return rep;
}

double fairness_min_slack(const EquilibriumTriple& t, const ScenarioSpace& space,
                          const ClusterPartition& partition, int samples, std::uint64_t seed) {
  const int n = t.Y_tilde.agents();
  const int m = space.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  double min_slack = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Matrix Y(n, m);
    Vector base(n);
    for (int j = 0; j < n; ++j) base[j] = noise(rng);
    for (int w = 0; w < m; ++w) {
      for (int j = 0; j < n; ++j) Y(j, w) = noise(rng);
      for (int g = 0; g < partition.groups(); ++g) {
        const auto& grp = partition.group(g);
        double mean = 0.0;
        for (int j : grp) mean += Y(j, w);
        mean /= static_cast<double>(grp.size());
        for (int j : grp) Y(j, w) += base[j] - mean;
      }
    }
    double priced = 0.0;
    for (int j = 0; j < n; ++j)
      for (int w = 0; w < m; ++w) priced += space.prob(w) * t.Q(j, w) * Y(j, w);
    min_slack = std::min(min_slack, base.sum() - priced);
  }
  return min_slack;
}

CheckReport check_certificate(const EquilibriumCertificate& cert, const ScenarioSpace& space,
                              const Allocation& X, const UtilitySpec& U,
                              const ClusterPartition& partition, const SolverConfig& cfg) {
  CheckReport rep;
  auto fail = [&rep](const std::string& what) {
    rep.pass = false;
    rep.failures.push_back(what);
  };
  const EquilibriumTriple& t = cert.triple;
  const double scale = std::max(1.0, std::abs(cert.primal_value));
  const int m = space.size();

  if (!(cert.lambda > 0.0)) fail("lambda not strictly positive");
  if (!(t.Q.densities().minCoeff() > 0.0)) fail("pricing density not strictly positive");

  rep.recomputed.clearing_max = aggregate(t.Y_tilde).cwiseAbs().maxCoeff();
  if (rep.recomputed.clearing_max > 1e-10)
    fail(fmt_residual("clearing", rep.recomputed.clearing_max));

  Vector eq = expectation(space, t.Y_tilde, t.Q);
  rep.recomputed.budget_expectation_max = eq.cwiseAbs().maxCoeff();
  if (rep.recomputed.budget_expectation_max > 1e-8)
    fail(fmt_residual("exchange expectation", rep.recomputed.budget_expectation_max));

  double capital = std::abs(t.a.sum() - t.A.A);
  if (capital > 1e-10) fail(fmt_residual("capital sum", capital));

  // the triple must reproduce the reported optimal value
  double value = 0.0;
  for (int w = 0; w < m; ++w) {
    Vector x(X.agents());
    for (int j = 0; j < X.agents(); ++j) x[j] = t.a[j] + X(j, w) + t.Y_tilde(j, w) - eq[j];
    value += space.prob(w) * evaluate(U, x);
  }
  if (std::abs(value - cert.primal_value) > 1e-9 * scale)
    fail(fmt_residual("primal value", std::abs(value - cert.primal_value)));

  // weak duality bound at the certified scale and pricing vector
  if (rep.pass || t.Q.densities().minCoeff() > 0.0) {
    double priced_x = 0.0;
    {
      Vector e = expectation(space, X, t.Q);
      priced_x = e.sum();
    }
    double bound = cert.lambda * (priced_x + t.A.A);
    for (int w = 0; w < m; ++w)
      bound += space.prob(w) * conjugate_eval(U, (cert.lambda * t.Q.densities().col(w)).eval());
    if (bound < cert.primal_value - 1e-9 * scale)
      fail(fmt_residual("weak duality", cert.primal_value - bound));

    auto [lam_fixed, val_fixed] = solve_fixed_q_dual(space, X, U, t.A, t.Q, cfg);
    rep.recomputed.fixed_q_consistency = std::abs(val_fixed - cert.dual_value);
    if (rep.recomputed.fixed_q_consistency > 1e-8 * scale)
      fail(fmt_residual("fixed-Q dual", rep.recomputed.fixed_q_consistency));
    if (cert.lambda > 0.0 &&
        std::abs(lam_fixed - cert.lambda) > 1e-6 * std::max(1.0, cert.lambda))
      fail(fmt_residual("dual scale vs fixed-Q minimizer",
                        std::abs(lam_fixed - cert.lambda)));
  }

  if (std::abs((cert.dual_value - cert.primal_value) - cert.gap) > 1e-12 * scale)
    fail("recorded gap inconsistent with recorded values");

  rep.recomputed.nash_max_improvement = verify_nash(t, space, X, U, cfg);
  if (rep.recomputed.nash_max_improvement > 1e-7 * scale)
    fail(fmt_residual("nash improvement", rep.recomputed.nash_max_improvement));

  rep.recomputed.fairness_min_slack = fairness_min_slack(t, space, partition, 20, 7);
  if (rep.recomputed.fairness_min_slack < -1e-9)
    fail(fmt_residual("fairness slack", rep.recomputed.fairness_min_slack));

  auto meas = verify_measurability(t, space, X, partition, smoothness(U).differentiable);
  rep.recomputed.measurability_max_spread = meas.max_spread;
  if (meas.applicable && meas.max_spread > 1e-8)
    fail(fmt_residual("measurability spread", meas.max_spread));

  return rep;
}

}  // namespace msorte
