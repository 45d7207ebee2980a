#include "msorte/solver.hpp"

#include <cmath>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

#include "msorte/conjugate.hpp"
#include "msorte/optim.hpp"

namespace msorte {

namespace {

constexpr double kDensityFloor = 1e-14;

void parallel_for(int count, const SolverConfig& cfg, const std::function<void(int)>& body) {
  int workers = (cfg.parallel && cfg.threads > 1) ? std::min(cfg.threads, count) : 1;
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += workers) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Basis of the subspace {y : sum_{j in G} y_j = 0 for every group G},
/// one (e_i - e_last) column per non-last group member.
Matrix zero_sum_basis(const ClusterPartition& partition) {
  const int n = partition.agents();
  const int dims = n - partition.groups();
  Matrix Z = Matrix::Zero(n, dims);
  int col = 0;
  for (int g = 0; g < partition.groups(); ++g) {
    const auto& grp = partition.group(g);
    for (size_t i = 0; i + 1 < grp.size(); ++i) {
      Z(grp[i], col) = 1.0;
      Z(grp.back(), col) = -1.0;
      ++col;
    }
  }
  return Z;
}

/// Equal split within each group: x_j + y_j constant over the group.
Vector equal_split_start(const Vector& x, const Vector& budgets, const ClusterPartition& partition) {
  Vector y(x.size());
  for (int g = 0; g < partition.groups(); ++g) {
    const auto& grp = partition.group(g);
    double mean_x = 0.0;
    for (int j : grp) mean_x += x[j];
    mean_x /= static_cast<double>(grp.size());
    for (int j : grp) y[j] = budgets[g] / static_cast<double>(grp.size()) - x[j] + mean_x;
  }
  return y;
}

Vector group_multipliers_smooth(const Vector& grad, const ClusterPartition& partition) {
  Vector mu(partition.groups());
  for (int g = 0; g < partition.groups(); ++g) {
    double acc = 0.0;
    for (int j : partition.group(g)) acc += grad[j];
    mu[g] = acc / static_cast<double>(partition.group(g).size());
  }
  return mu;
}

Vector group_multipliers_fd(const UtilitySpec& U, const Vector& point,
                            const ClusterPartition& partition) {
  const double h = 1e-6;
  Vector mu(partition.groups());
  for (int g = 0; g < partition.groups(); ++g) {
    double acc = 0.0;
    for (int j : partition.group(g)) {
      Vector p = point, m = point;
      p[j] += h;
      m[j] -= h;
      acc += (evaluate(U, p) - evaluate(U, m)) / (2.0 * h);
    }
    mu[g] = acc / static_cast<double>(partition.group(g).size());
  }
  return mu;
}

Vector jitter_vector(int dims, const SolverConfig& cfg, std::uint64_t salt) {
  Vector v = Vector::Zero(dims);
  if (cfg.init_jitter != 0.0) {
    std::mt19937_64 rng(cfg.jitter_seed ^ (salt * 0x9e3779b97f4a7c15ull + 1));
    std::normal_distribution<double> d(0.0, cfg.init_jitter);
    for (int i = 0; i < dims; ++i) v[i] = d(rng);
  }
  return v;
}

ScenarioSolution solve_scenario_impl(const Vector& x, const Vector& budgets,
                                     const ClusterPartition& partition, const UtilitySpec& U,
                                     const SolverConfig& cfg, std::uint64_t salt) {
  const int n = partition.agents();
  if (static_cast<int>(budgets.size()) != partition.groups())
    throw InputError("solve_scenario: one budget per group required");
  ScenarioSolution out;

  Vector y0 = equal_split_start(x, budgets, partition);
  const int dims = n - partition.groups();
  if (dims == 0) {
    out.y = y0;
    Vector point = x + y0;
    out.multipliers = smoothness(U).differentiable
                          ? group_multipliers_smooth(gradient(U, point), partition)
                          : group_multipliers_fd(U, point, partition);
    return out;
  }

  Matrix Z = zero_sum_basis(partition);
  auto f = [&](const Vector& t) { return evaluate(U, x + y0 + Z * t); };

  if (smoothness(U).differentiable) {
    auto g = [&](const Vector& t) { return (Z.transpose() * gradient(U, x + y0 + Z * t)).eval(); };
    auto h = [&](const Vector& t) {
      return (Z.transpose() * hessian(U, x + y0 + Z * t) * Z).eval();
    };
    Vector t0 = jitter_vector(dims, cfg, salt);
    auto res = optim::newton_maximize(f, g, h, t0, cfg.newton_tol, cfg.max_iter);
    if (!res.converged)
      throw SolverError("scenario solve did not converge: gradient norm " +
                        std::to_string(res.grad_norm));
    out.y = y0 + Z * res.x;
    out.multipliers = group_multipliers_smooth(gradient(U, x + out.y), partition);
  } else {
    Vector t0 = jitter_vector(dims, cfg, salt);
    auto res = optim::nelder_mead_maximize(f, t0, 0.5, 1e-14, 6000);
    out.y = y0 + Z * res.x;
    out.multipliers = group_multipliers_fd(U, x + out.y, partition);
    out.approximate = true;
  }
  return out;
}

}  // namespace

ScenarioSolution solve_scenario(const Vector& x, const Vector& budgets,
                                const ClusterPartition& partition, const UtilitySpec& U,
                                const SolverConfig& cfg) {
  return solve_scenario_impl(x, budgets, partition, U, cfg, 0);
}

ScenarioSolution solve_scenario(const Vector& x, double budget, const UtilitySpec& U,
                                const SolverConfig& cfg) {
  Vector b(1);
  b[0] = budget;
  return solve_scenario_impl(x, b, ClusterPartition::single(static_cast<int>(x.size())), U, cfg, 0);
}

std::pair<Vector, double> solve_det(const ScenarioSpace& space, const Allocation& X,
                                    const UtilitySpec& U, const BudgetSpec& A,
                                    const SolverConfig& cfg) {
  const int n = X.agents();
  const int m = space.size();
  Vector a0 = Vector::Constant(n, A.A / n);
  if (n == 1) {
    double v = 0.0;
    for (int w = 0; w < m; ++w) v += space.prob(w) * evaluate(U, X.column(w) + a0);
    return {a0, v};
  }
  auto partition = ClusterPartition::single(n);
  Matrix Z = zero_sum_basis(partition);
  auto point = [&](const Vector& t) { return (a0 + Z * t).eval(); };
  auto f = [&](const Vector& t) {
    Vector a = point(t);
    double v = 0.0;
    for (int w = 0; w < m; ++w) v += space.prob(w) * evaluate(U, X.column(w) + a);
    return v;
  };
  if (smoothness(U).differentiable) {
    auto g = [&](const Vector& t) {
      Vector a = point(t);
      Vector acc = Vector::Zero(n);
      for (int w = 0; w < m; ++w) acc += space.prob(w) * gradient(U, X.column(w) + a);
      return (Z.transpose() * acc).eval();
    };
    auto h = [&](const Vector& t) {
      Vector a = point(t);
      Matrix acc = Matrix::Zero(n, n);
      for (int w = 0; w < m; ++w) acc += space.prob(w) * hessian(U, X.column(w) + a);
      return (Z.transpose() * acc * Z).eval();
    };
    auto res = optim::newton_maximize(f, g, h, Vector::Zero(n - 1), cfg.newton_tol, cfg.max_iter);
    if (!res.converged)
      throw SolverError("deterministic solve did not converge: gradient norm " +
                        std::to_string(res.grad_norm));
    return {point(res.x), res.value};
  }
  auto res = optim::nelder_mead_maximize(f, Vector::Zero(n - 1), 0.5, 1e-14, 6000);
  return {point(res.x), res.value};
}

namespace {

struct Sweep {
  double value = 0.0;
  Vector mean_multipliers;  // probability-weighted, per group
  Matrix Y;
  Matrix multipliers;  // groups x scenarios
  bool approximate = false;
};

Sweep primal_sweep(const ScenarioSpace& space, const Allocation& X, const UtilitySpec& U,
                   const Vector& budgets, const ClusterPartition& partition,
                   const SolverConfig& cfg) {
  const int m = space.size();
  const int n = X.agents();
  Sweep s;
  s.Y.resize(n, m);
  s.multipliers.resize(partition.groups(), m);
  Vector values(m);
  std::vector<char> approx(m, 0);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(m, cfg, [&](int w) {
    try {
      auto r = solve_scenario_impl(X.column(w), budgets, partition, U, cfg,
                                   static_cast<std::uint64_t>(w) + 1);
      s.Y.col(w) = r.y;
      s.multipliers.col(w) = r.multipliers;
      values[w] = space.prob(w) * evaluate(U, X.column(w) + r.y);
      approx[w] = r.approximate ? 1 : 0;
    } catch (...) {
      std::lock_guard<std::mutex> lk(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  // fixed ascending-order reduction for determinism under any worker count
  double v = 0.0;
  for (int w = 0; w < m; ++w) v += values[w];
  s.value = v;
  s.mean_multipliers = Vector::Zero(partition.groups());
  for (int w = 0; w < m; ++w) s.mean_multipliers += space.prob(w) * s.multipliers.col(w);
  for (int w = 0; w < m; ++w) s.approximate = s.approximate || approx[w];
  return s;
}

/// Concave maximization of the sweep value over group budgets summing to A.
Vector optimize_group_budgets(const ScenarioSpace& space, const Allocation& X,
                              const UtilitySpec& U, double A, const ClusterPartition& partition,
                              const SolverConfig& cfg) {
  const int k = partition.groups();
  Vector budgets(k);
  for (int g = 0; g < k; ++g)
    budgets[g] = A * static_cast<double>(partition.group(g).size()) / partition.agents();
  if (k == 1) return budgets;

  auto expand = [&](const Vector& r) {
    Vector b(k);
    double used = 0.0;
    for (int g = 0; g + 1 < k; ++g) {
      b[g] = r[g];
      used += r[g];
    }
    b[k - 1] = A - used;
    return b;
  };
  Vector r = budgets.head(k - 1);
  double value = 0.0;
  Vector grad(k - 1);
  auto eval_point = [&](const Vector& rr, Vector* gout) {
    Sweep s = primal_sweep(space, X, U, expand(rr), partition, cfg);
    if (gout)
      for (int g = 0; g + 1 < k; ++g)
        (*gout)[g] = s.mean_multipliers[g] - s.mean_multipliers[k - 1];
    return s.value;
  };
  value = eval_point(r, &grad);
  for (int it = 0; it < 100; ++it) {
    if (grad.norm() <= cfg.outer_tol) break;
    // finite-difference Jacobian of the reduced gradient (envelope derivatives)
    const double h = 1e-6;
    Matrix J(k - 1, k - 1);
    for (int c = 0; c + 1 < k; ++c) {
      Vector rp = r;
      rp[c] += h;
      Vector gp(k - 1);
      eval_point(rp, &gp);
      J.col(c) = (gp - grad) / h;
    }
    Vector step;
    Eigen::FullPivLU<Matrix> lu(J);
    if (lu.isInvertible()) step = -lu.solve(grad); else step = grad;
    if (step.dot(grad) <= 0.0) step = grad;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Vector rt = r + t * step;
      Vector gt(k - 1);
      double vt = eval_point(rt, &gt);
      if (vt >= value - 1e-15 * std::abs(value)) {
        r = rt;
        value = vt;
        grad = gt;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return expand(r);
}

}  // namespace

PrimalSolution solve_primal(const ScenarioSpace& space, const Allocation& X, const UtilitySpec& U,
                            const BudgetSpec& A, const ClusterPartition& partition,
                            const SolverConfig& cfg) {
  if (X.agents() != partition.agents() || X.agents() != U.agents())
    throw InputError("solve_primal: dimension mismatch");
  Vector budgets = optimize_group_budgets(space, X, U, A.A, partition, cfg);
  Sweep s = primal_sweep(space, X, U, budgets, partition, cfg);
  PrimalSolution out;
  out.Y_hat = Allocation(s.Y);
  out.value = s.value;
  out.multipliers = s.multipliers;
  out.group_budgets = budgets;
  out.approximate = s.approximate;
  return out;
}

namespace {

struct DualSweep {
  double value = 0.0;
  Vector group_means;   // E_P[z_G]
  Matrix z;             // groups x scenarios
  bool floor_flag = false;
};

/// Pointwise minimization of sum_G z_G c_G + V(embed(z)) over z > 0 for one
/// scenario; c_G carries the group aggregate endowment plus the group budget.
Vector pointwise_dual_min(const Vector& c, const UtilitySpec& U, const ClusterPartition& partition,
                          const SolverConfig& cfg, bool* floor_flag) {
  const int k = partition.groups();
  const int n = partition.agents();

  if (k == 1) {
    auto f = [&](double z) { return c[0] + conjugate_diag_derivative(U, z); };
    auto df = [&](double z) { return conjugate_diag_curvature(U, z); };
    auto r = optim::increasing_root(f, df, 1.0, kDensityFloor, 1e-12, cfg.max_iter);
    if (r.hit_floor) *floor_flag = true;
    Vector z(1);
    z[0] = r.x;
    return z;
  }

  auto embed = [&](const Vector& z) {
    Vector w(n);
    for (int j = 0; j < n; ++j) w[j] = z[partition.group_of(j)];
    return w;
  };
  auto objective = [&](const Vector& z) {
    double v = c.dot(z);
    return v + conjugate_eval(U, embed(z));
  };

  if (!smoothness(U).differentiable) {
    // log-space Nelder-Mead keeps z positive
    auto f = [&](const Vector& s) { return -objective(s.array().exp().matrix()); };
    auto r = optim::nelder_mead_maximize(f, Vector::Zero(k), 0.5, 1e-13, 4000);
    Vector z = r.x.array().exp().matrix();
    for (int g = 0; g < k; ++g)
      if (z[g] <= kDensityFloor) *floor_flag = true;
    return z;
  }

  Vector z = Vector::Constant(k, 1.0);
  double fz = objective(z);
  for (int it = 0; it < cfg.max_iter; ++it) {
    auto conj = conjugate_eval_numeric(U, embed(z));
    Vector grad(k);
    for (int g = 0; g < k; ++g) {
      double s = 0.0;
      for (int j : partition.group(g)) s += conj.maximizer[j];
      grad[g] = c[g] - s;  // envelope: dV/dw_j = -x*_j
    }
    if (grad.norm() <= 1e-12) break;
    // Hessian of V restricted to the cluster pattern: B^T (-H_U)^{-1} B
    Matrix Hu = -hessian(U, conj.maximizer);
    Eigen::LDLT<Matrix> ldlt(Hu);
    Matrix B = Matrix::Zero(n, k);
    for (int j = 0; j < n; ++j) B(j, partition.group_of(j)) = 1.0;
    Matrix Hv = B.transpose() * ldlt.solve(B);
    Vector step;
    Eigen::LDLT<Matrix> hl(Hv);
    if (hl.info() == Eigen::Success && hl.isPositive()) step = -hl.solve(grad); else step = -grad;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      Vector zt = z + t * step;
      bool positive = true;
      for (int g = 0; g < k; ++g)
        if (zt[g] <= kDensityFloor) positive = false;
      if (positive) {
        double ft = objective(zt);
        if (ft <= fz) {
          z = zt;
          fz = ft;
          moved = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return z;
}

DualSweep dual_sweep(const ScenarioSpace& space, const Allocation& X, const UtilitySpec& U,
                     const Vector& nu, const ClusterPartition& partition, const SolverConfig& cfg) {
  const int m = space.size();
  const int k = partition.groups();
  DualSweep s;
  s.z.resize(k, m);
  Vector values(m);
  std::vector<char> floors(m, 0);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(m, cfg, [&](int w) {
    try {
      Vector c(k);
      for (int g = 0; g < k; ++g) {
        double xg = 0.0;
        for (int j : partition.group(g)) xg += X(j, w);
        c[g] = xg + nu[g];
      }
      bool floor_flag = false;
      Vector z = pointwise_dual_min(c, U, partition, cfg, &floor_flag);
      s.z.col(w) = z;
      Vector wfull(partition.agents());
      for (int j = 0; j < partition.agents(); ++j) wfull[j] = z[partition.group_of(j)];
      values[w] = space.prob(w) * (c.dot(z) + conjugate_eval(U, wfull));
      floors[w] = floor_flag ? 1 : 0;
    } catch (...) {
      std::lock_guard<std::mutex> lk(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  double v = 0.0;
  for (int w = 0; w < m; ++w) v += values[w];
  s.value = v;
  s.group_means = Vector::Zero(k);
  for (int w = 0; w < m; ++w) s.group_means += space.prob(w) * s.z.col(w);
  for (int w = 0; w < m; ++w) s.floor_flag = s.floor_flag || (floors[w] != 0);
  return s;
}

}  // namespace

DualSolution solve_dual(const ScenarioSpace& space, const Allocation& X, const UtilitySpec& U,
                        const BudgetSpec& A, const ClusterPartition& partition,
                        const SolverConfig& cfg) {
  if (X.agents() != partition.agents() || X.agents() != U.agents())
    throw InputError("solve_dual: dimension mismatch");
  const int k = partition.groups();
  Vector nu(k);
  for (int g = 0; g < k; ++g)
    nu[g] = A.A * static_cast<double>(partition.group(g).size()) / partition.agents();

  DualSweep s = dual_sweep(space, X, U, nu, partition, cfg);
  if (k > 1) {
    // concave in nu; stationarity makes every group mean equal (the common
    // lambda), mirroring the primal budget split
    auto expand = [&](const Vector& r) {
      Vector v(k);
      double used = 0.0;
      for (int g = 0; g + 1 < k; ++g) {
        v[g] = r[g];
        used += r[g];
      }
      v[k - 1] = A.A - used;
      return v;
    };
    Vector r = nu.head(k - 1);
    auto grad_of = [&](const DualSweep& sw) {
      Vector g(k - 1);
      for (int i = 0; i + 1 < k; ++i) g[i] = sw.group_means[i] - sw.group_means[k - 1];
      return g;
    };
    Vector grad = grad_of(s);
    for (int it = 0; it < 100 && grad.norm() > cfg.outer_tol; ++it) {
      const double h = 1e-6;
      Matrix J(k - 1, k - 1);
      for (int c = 0; c + 1 < k; ++c) {
        Vector rp = r;
        rp[c] += h;
        J.col(c) = (grad_of(dual_sweep(space, X, U, expand(rp), partition, cfg)) - grad) / h;
      }
      Vector step;
      Eigen::FullPivLU<Matrix> lu(J);
      if (lu.isInvertible()) step = -lu.solve(grad); else step = grad;
      if (step.dot(grad) <= 0.0) step = grad;
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        DualSweep st = dual_sweep(space, X, U, expand(r + t * step), partition, cfg);
        Vector gt = grad_of(st);
        if (gt.norm() < grad.norm() || st.value > s.value) {
          r += t * step;
          s = st;
          grad = gt;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    nu = expand(r);
  }

  DualSolution out;
  out.lambda_hat = s.group_means.mean();
  if (!(out.lambda_hat > 0.0)) throw SolverError("dual scale is not positive");
  Matrix dens(X.agents(), space.size());
  for (int j = 0; j < X.agents(); ++j) {
    int g = partition.group_of(j);
    double mean_g = s.group_means[g];
    for (int w = 0; w < space.size(); ++w) dens(j, w) = s.z(g, w) / mean_g;
  }
  out.Q_hat = PricingVector(space, std::move(dens));
  out.value = s.value;
  out.floor_flag = s.floor_flag;
  out.approximate = !smoothness(U).differentiable;
  return out;
}

std::pair<double, double> solve_fixed_q_dual(const ScenarioSpace& space, const Allocation& X,
                                             const UtilitySpec& U, const BudgetSpec& A,
                                             const PricingVector& Q, const SolverConfig& cfg) {
  if (X.agents() != Q.agents() || X.scenarios() != Q.scenarios())
    throw InputError("solve_fixed_q_dual: dimension mismatch");
  const int n = X.agents();
  const int m = space.size();
  double sx = 0.0;
  {
    Vector e = expectation(space, X, Q);
    for (int j = 0; j < n; ++j) sx += e[j];
  }
  const double constant = sx + A.A;

  auto objective = [&](double lam) {
    double v = lam * constant;
    for (int w = 0; w < m; ++w) {
      Vector wv = lam * Q.densities().col(w);
      v += space.prob(w) * conjugate_eval(U, wv);
    }
    return v;
  };
  auto derivative = [&](double lam) {
    double d = constant;
    for (int w = 0; w < m; ++w) {
      const auto col = Q.densities().col(w);
      double acc = 0.0;
      switch (U.family) {
        case UtilityFamily::ExpPairwise: {
          double tau = 0.0;
          for (int j = 0; j < n; ++j) tau += col[j] / U.alpha[j];
          for (int j = 0; j < n; ++j) {
            double r = col[j] / U.alpha[j];
            if (r > 0.0) acc += r * std::log(lam * r);
          }
          if (tau > 0.0) acc -= 0.5 * tau * std::log(lam * tau);
          break;
        }
        case UtilityFamily::SumExp: {
          for (int j = 0; j < n; ++j) {
            double r = col[j] / U.alpha[j];
            if (r > 0.0) acc += r * std::log(lam * r);
          }
          break;
        }
        default: {
          auto conj = conjugate_eval_numeric(U, (lam * col).eval());
          acc = -col.dot(conj.maximizer);
          break;
        }
      }
      d += space.prob(w) * acc;
    }
    return d;
  };

  // probe the finite-entropy requirement before searching
  double probe = objective(1.0);
  if (!std::isfinite(probe)) throw SolverError("Q outside finite-entropy domain");

  // bracket the sign change of the derivative, narrow by golden section on
  // the objective, then polish with Newton on the derivative
  double lo = 1.0, hi = 1.0;
  double dlo = derivative(lo);
  int guard = 0;
  while (dlo > 0.0 && guard++ < 2000) {
    hi = lo;
    lo *= 0.5;
    if (lo < 1e-300) throw SolverError("fixed-Q dual scale underflow");
    dlo = derivative(lo);
  }
  guard = 0;
  double dhi = derivative(hi);
  while (dhi < 0.0 && guard++ < 2000) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw SolverError("fixed-Q dual scale overflow");
    dhi = derivative(hi);
  }
  double mid = optim::golden_section_minimize(objective, lo, hi, 1e-8 * std::max(1.0, hi - lo));
  auto root = optim::increasing_root(derivative,
                                     [&](double lam) {
                                       double h = std::max(1e-7 * lam, 1e-12);
                                       return (derivative(lam + h) - derivative(lam - h)) / (2.0 * h);
                                     },
                                     mid, 1e-300, 1e-13, cfg.max_iter);
  double lambda = root.x;
  return {lambda, objective(lambda)};
}

}  // namespace msorte
