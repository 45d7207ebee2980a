#ifndef MSORTE_CONJUGATE_HPP
#define MSORTE_CONJUGATE_HPP

#include <cstdint>

#include "msorte/types.hpp"
#include "msorte/utility.hpp"

namespace msorte {

/// V(w) = sup_x (U(x) - <x,w>) evaluated on the nonnegative orthant.
/// All admitted families are bounded above, so V is finite there; when some
/// w_j = 0 the supremum is approached only in the limit x_j -> +inf and
/// `attained` is false.
struct ConjugateResult {
  double value = 0.0;
  Vector maximizer;  // inner maximizer (free coordinates pinned far out)
  bool attained = true;
};

/// Ground-truth route: multi-start damped Newton on grad U(x) = w (smooth
/// families), Nelder-Mead for the kink family.
ConjugateResult conjugate_eval_numeric(const UtilitySpec& spec, const Vector& w,
                                       std::uint64_t seed = 0);

bool has_analytic_conjugate(const UtilitySpec& spec);

/// Closed form for ExpPairwise / SumExp, rederived from the inner stationary
/// point and admitted only after the cross-check suite against the numeric
/// route passes.
double conjugate_eval_analytic(const UtilitySpec& spec, const Vector& w);

/// Analytic when available, numeric otherwise.
double conjugate_eval(const UtilitySpec& spec, const Vector& w);

/// V(z,...,z) for z >= 0; z = 0 gives sup U.
double conjugate_diag(const UtilitySpec& spec, double z);

/// d/dz V(z*1) for z > 0; strictly increasing in z.
double conjugate_diag_derivative(const UtilitySpec& spec, double z);

/// d2/dz2 V(z*1) for z > 0 (finite differences for families without a
/// closed form).
double conjugate_diag_curvature(const UtilitySpec& spec, double z);

}  // namespace msorte

#endif
