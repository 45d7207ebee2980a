#ifndef MSORTE_UTILITY_HPP
#define MSORTE_UTILITY_HPP

#include <string>
#include <vector>

#include "msorte/types.hpp"

namespace msorte {

enum class UtilityFamily { ExpPairwise, SumExp, SumPlusAgg, SumExpKink };

enum class AggregatorKind { Exponential, Rational, Arctan };

struct AggregatorSpec {
  AggregatorKind kind = AggregatorKind::Exponential;
  double p = 1.0;
};

/// Tagged description of a multivariate utility family.
///
/// ExpPairwise  U(x) = N^2/2 - (sum_j exp(-alpha_j x_j))^2 / 2
/// SumExp       U(x) = sum_j (1 - exp(-alpha_j x_j))
/// SumPlusAgg   U(x) = sum_j (1 - exp(-alpha_j x_j)) + u(sum_j beta_j x_j)
/// SumExpKink   U(x) = sum_j (1 - exp(-alpha_j x_j)) - (sum_j gamma_j (x_j - k_j)^-)^a
struct UtilitySpec {
  UtilityFamily family = UtilityFamily::SumExp;
  Vector alpha;
  Vector beta_weights;  // SumPlusAgg aggregator weights
  AggregatorSpec agg;
  Vector gamma;  // SumExpKink penalty weights
  Vector kink;   // SumExpKink kink locations
  double exponent = 1.0;  // SumExpKink outer power a >= 1

  int agents() const { return static_cast<int>(alpha.size()); }
};

struct SmoothnessTag {
  bool differentiable = true;
  bool strictly_concave = true;
};

SmoothnessTag smoothness(const UtilitySpec& spec);

/// Family formula; returns -inf (and sets *overflowed) when an exponential
/// argument would exceed the double range instead of producing NaN.
double evaluate(const UtilitySpec& spec, const Vector& x, bool* overflowed = nullptr);

/// Analytic partial derivatives; strictly positive for differentiable
/// families. Throws NondifferentiableError on a kink hyperplane.
Vector gradient(const UtilitySpec& spec, const Vector& x);

/// Hessian of U at x (differentiable families only; negative definite).
Matrix hessian(const UtilitySpec& spec, const Vector& x);

/// sup over R^N of U; finite for every admitted family.
double sup_value(const UtilitySpec& spec);

struct ValidationReport {
  bool valid = false;
  std::vector<std::string> violations;
  SmoothnessTag smoothness;
  bool well_controlled = false;       // built by the sum-plus-aggregator recipe
  std::string integrability;          // "verified" / "unverified" domination witness
  bool uniqueness_applicable = false; // dual uniqueness needs differentiability
};

ValidationReport validate(const UtilitySpec& spec);

std::string family_name(UtilityFamily family);
UtilityFamily family_from_name(const std::string& name);

}  // namespace msorte

#endif
