#ifndef MSORTE_EQUILIBRIUM_HPP
#define MSORTE_EQUILIBRIUM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "msorte/solver.hpp"
#include "msorte/types.hpp"
#include "msorte/utility.hpp"

namespace msorte {

/// The equilibrium triple: risk exchange Y_tilde, pricing vector Q and the
/// initial capital split a with sum a_j = A.
struct EquilibriumTriple {
  Allocation Y_tilde;
  PricingVector Q;
  Vector a;
  BudgetSpec A;
};

struct ResidualSet {
  double clearing_max = 0.0;
  double budget_expectation_max = 0.0;
  double nash_max_improvement = 0.0;
  double fairness_min_slack = 0.0;
  double measurability_max_spread = 0.0;
  double fixed_q_consistency = 0.0;
};

struct CertificateFlags {
  bool unique = false;
  bool differentiable = false;
  bool oracle_checked = false;
};

/// Self-contained record: everything needed to re-check the equilibrium
/// without re-solving.
struct EquilibriumCertificate {
  EquilibriumTriple triple;
  double lambda = 0.0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  ResidualSet residuals;
  CertificateFlags flags;
  std::string config_hash;
  std::string version;
};

/// a = E_Q[Y_hat] componentwise, Y_tilde = Y_hat - a. Throws SolverError with
/// the offending residual when the triple invariants fail.
EquilibriumTriple assemble(const PrimalSolution& p, const DualSolution& d,
                           const ScenarioSpace& space, const Allocation& X, const BudgetSpec& A);

/// Max over agents of the gain from re-optimizing that agent's exchange in
/// the full M-dimensional space (everyone else held fixed, expectations under
/// the agent's own pricing measure subtracted). Nonpositive up to solver
/// tolerance at an equilibrium.
double verify_nash(const EquilibriumTriple& t, const ScenarioSpace& space, const Allocation& X,
                   const UtilitySpec& U, const SolverConfig& cfg);

struct BuhlmannReport {
  double clearing_max = 0.0;
  /// Max spread of density rows inside each cluster group.
  double density_spread_max = 0.0;
  /// Per-agent univariate re-optimization gain; only meaningful for
  /// sum-of-univariate families.
  double alpha_improvement = 0.0;
  bool alpha_checked = false;
};
BuhlmannReport verify_buhlmann(const EquilibriumTriple& t, const ScenarioSpace& space,
                               const Allocation& X, const UtilitySpec& U,
                               const ClusterPartition& partition, const SolverConfig& cfg);

struct MeasurabilityReport {
  bool applicable = false;
  std::string reason;
  double max_spread = 0.0;
};
/// Groups scenarios by the aggregate endowment and reports the max spread of
/// the pricing density and of the post-trade positions within a level set.
/// Only claimed for the trivial partition with a differentiable family.
MeasurabilityReport verify_measurability(const EquilibriumTriple& t, const ScenarioSpace& space,
                                         const Allocation& X, const ClusterPartition& partition,
                                         bool differentiable);

/// Min over random feasible exchanges Y (group aggregates constant per
/// scenario) of sum_G c_G - sum_j E_{Q^j}[Y^j]; nonnegative up to rounding.
double fairness_min_slack(const EquilibriumTriple& t, const ScenarioSpace& space,
                          const ClusterPartition& partition, int samples, std::uint64_t seed);

struct CheckReport {
  bool pass = true;
  std::vector<std::string> failures;
  ResidualSet recomputed;
};
/// Re-derives every certifiable quantity from the stored triple and scale;
/// never re-solves the primal.
CheckReport check_certificate(const EquilibriumCertificate& cert, const ScenarioSpace& space,
                              const Allocation& X, const UtilitySpec& U,
                              const ClusterPartition& partition, const SolverConfig& cfg);

}  // namespace msorte

#endif
