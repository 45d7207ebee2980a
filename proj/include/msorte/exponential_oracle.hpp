#ifndef MSORTE_EXPONENTIAL_ORACLE_HPP
#define MSORTE_EXPONENTIAL_ORACLE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "msorte/types.hpp"

namespace msorte {

/// Closed-form equilibrium for the pairwise exponential family, used as an
/// independent test oracle once self_validate has passed.
struct ExponentialInstance {
  Vector alpha;
  Allocation X;
  double A = 0.0;

  ExponentialInstance(Vector alpha_in, Allocation X_in, double A_in);

  double beta = 0.0;   // sum 1/alpha_j
  double Gamma = 0.0;  // sum (1/alpha_j) log(1/alpha_j)
  Vector xbar;         // per-scenario aggregate endowment
};

/// All rows equal the normalized exponential tilt exp(-2*xbar/beta), computed
/// in log space.
PricingVector oracle_density(const ExponentialInstance& inst, const ScenarioSpace& space);

/// Y_j = -X_j + xbar/(beta*alpha_j) + kappa_j with the per-agent constant
/// kappa_j = (A+Gamma)/(beta*alpha_j) + log(alpha_j)/alpha_j; the constants
/// sum to A, so the aggregate clears the budget exactly.
Allocation oracle_allocation(const ExponentialInstance& inst);

/// Dual scale under the constants adopted by self_validate.
double oracle_lambda(const ExponentialInstance& inst, const ScenarioSpace& space);

struct OracleValidation {
  bool pass = false;
  bool enabled = false;
  std::string adopted;  // which lambda constant matched the numeric dual
  double max_kkt_residual = 0.0;
  double max_density_residual = 0.0;
  double max_lambda_relative = 0.0;
  std::vector<std::string> log;
};

/// Arbitrates the closed-form constants against the numeric solvers on random
/// instances; the oracle is only trusted when this passes.
OracleValidation self_validate(std::uint64_t seed);

}  // namespace msorte

#endif
