#ifndef MSORTE_SOLVER_HPP
#define MSORTE_SOLVER_HPP

#include <cstdint>
#include <utility>

#include "msorte/types.hpp"
#include "msorte/utility.hpp"

namespace msorte {

struct SolverConfig {
  double newton_tol = 1e-11;  // gradient norm, per-scenario Newton
  int max_iter = 200;
  double outer_tol = 1e-10;  // cluster budget search
  bool parallel = false;
  int threads = 1;
  // starting-point jitter, used by the uniqueness checks
  double init_jitter = 0.0;
  std::uint64_t jitter_seed = 0;
};

struct PrimalSolution {
  Allocation Y_hat;
  double value = 0.0;
  /// Lagrange multiplier of each scenario's budget constraint; rows indexed
  /// by cluster group (single row when the partition is trivial).
  Matrix multipliers;
  Vector group_budgets;
  bool approximate = false;  // derivative-free path (kink family)
};

struct DualSolution {
  double lambda_hat = 0.0;
  PricingVector Q_hat;
  double value = 0.0;
  bool floor_flag = false;  // some scenario density hit the bracket floor
  bool approximate = false;
};

/// Maximizes U(x + y) over y with per-group budget constraints
/// sum_{j in G} y_j = budgets[G]. Returns the optimal y and one multiplier
/// per group (the common marginal utility within the group for smooth U).
struct ScenarioSolution {
  Vector y;
  Vector multipliers;
  bool approximate = false;
};
ScenarioSolution solve_scenario(const Vector& x, const Vector& budgets,
                                const ClusterPartition& partition, const UtilitySpec& U,
                                const SolverConfig& cfg);
/// Single-budget convenience (trivial partition).
ScenarioSolution solve_scenario(const Vector& x, double budget, const UtilitySpec& U,
                                const SolverConfig& cfg);

/// Deterministic allocation problem: maximize E_P[U(X + a)] over constant
/// vectors a with sum a_j = A.
std::pair<Vector, double> solve_det(const ScenarioSpace& space, const Allocation& X,
                                    const UtilitySpec& U, const BudgetSpec& A,
                                    const SolverConfig& cfg);

PrimalSolution solve_primal(const ScenarioSpace& space, const Allocation& X,
                            const UtilitySpec& U, const BudgetSpec& A,
                            const ClusterPartition& partition, const SolverConfig& cfg);

DualSolution solve_dual(const ScenarioSpace& space, const Allocation& X, const UtilitySpec& U,
                        const BudgetSpec& A, const ClusterPartition& partition,
                        const SolverConfig& cfg);

/// Minimizes over lambda >= 0 the Fenchel bound at a fixed pricing vector.
/// Returns (lambda, value).
std::pair<double, double> solve_fixed_q_dual(const ScenarioSpace& space, const Allocation& X,
                                             const UtilitySpec& U, const BudgetSpec& A,
                                             const PricingVector& Q, const SolverConfig& cfg);

inline double duality_gap(const PrimalSolution& p, const DualSolution& d) {
  return d.value - p.value;
}

}  // namespace msorte

#endif
