#include "msorte/exponential_oracle.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "msorte/optim.hpp"
#include "msorte/solver.hpp"
#include "msorte/utility.hpp"

namespace msorte {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

/// log E_P[exp(-2*xbar/beta)]
double log_tilt_mean(const ExponentialInstance& inst, const ScenarioSpace& space) {
  Vector args(space.size());
  for (int w = 0; w < space.size(); ++w)
    args[w] = std::log(space.prob(w)) - 2.0 * inst.xbar[w] / inst.beta;
  return optim::log_sum_exp(args);
}

double lambda_from_bracket(const ExponentialInstance& inst, const ScenarioSpace& space,
                           double bracket_shift) {
  double L = log_tilt_mean(inst, space);
  double bracket = inst.A + bracket_shift + inst.Gamma - 0.5 * inst.beta * std::log(inst.beta) -
                   0.5 * inst.beta * L;
  return std::exp(-2.0 * bracket / inst.beta);
}

}  // namespace

ExponentialInstance::ExponentialInstance(Vector alpha_in, Allocation X_in, double A_in)
    : alpha(std::move(alpha_in)), X(std::move(X_in)), A(A_in) {
  if (alpha.size() != X.agents()) throw InputError("oracle: alpha/X dimension mismatch");
  for (int j = 0; j < alpha.size(); ++j)
    if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j]))
      throw InputError("oracle: alpha must be finite and > 0");
  for (int j = 0; j < alpha.size(); ++j) {
    beta += 1.0 / alpha[j];
    Gamma += std::log(1.0 / alpha[j]) / alpha[j];
  }
  xbar = Vector::Zero(X.scenarios());
  for (int j = 0; j < X.agents(); ++j) xbar += X.values().row(j);
}

PricingVector oracle_density(const ExponentialInstance& inst, const ScenarioSpace& space) {
  if (space.size() != inst.X.scenarios()) throw InputError("oracle: scenario count mismatch");
  double L = log_tilt_mean(inst, space);
  Vector row(space.size());
  for (int w = 0; w < space.size(); ++w)
    row[w] = std::exp(-2.0 * inst.xbar[w] / inst.beta - L);
  Matrix dens(inst.X.agents(), space.size());
  for (int j = 0; j < inst.X.agents(); ++j) dens.row(j) = row;
  return PricingVector(space, std::move(dens));
}

Allocation oracle_allocation(const ExponentialInstance& inst) {
  const int n = inst.X.agents();
  const int m = inst.X.scenarios();
  Matrix Y(n, m);
  for (int j = 0; j < n; ++j) {
    double kappa = (inst.A + inst.Gamma) / (inst.beta * inst.alpha[j]) +
                   std::log(inst.alpha[j]) / inst.alpha[j];
    for (int w = 0; w < m; ++w)
      Y(j, w) = -inst.X(j, w) + inst.xbar[w] / (inst.beta * inst.alpha[j]) + kappa;
  }
  return Allocation(std::move(Y));
}

double oracle_lambda(const ExponentialInstance& inst, const ScenarioSpace& space) {
  return lambda_from_bracket(inst, space, 0.0);
}

OracleValidation self_validate(std::uint64_t seed) {
  OracleValidation rep;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_n(2, 4), pick_m(2, 5);
  std::uniform_real_distribution<double> alpha_draw(0.3, 3.0), x_draw(-1.5, 1.5),
      a_draw(-1.0, 1.0), p_draw(0.2, 1.0);

  SolverConfig cfg;
  int printed_matches = 0, corrected_matches = 0;
  rep.pass = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = pick_n(rng);
    const int m = pick_m(rng);
    Vector alpha(n);
    for (int j = 0; j < n; ++j) alpha[j] = alpha_draw(rng);
    Matrix xs(n, m);
    for (int j = 0; j < n; ++j)
      for (int w = 0; w < m; ++w) xs(j, w) = x_draw(rng);
    Vector probs(m);
    for (int w = 0; w < m; ++w) probs[w] = p_draw(rng);
    probs /= probs.sum();
    std::vector<std::string> labels;
    for (int w = 0; w < m; ++w) labels.push_back("s" + std::to_string(w + 1));
    ScenarioSpace space(labels, probs);
    double A = a_draw(rng);

    ExponentialInstance inst(alpha, Allocation(xs), A);
    UtilitySpec U;
    U.family = UtilityFamily::ExpPairwise;
    U.alpha = alpha;

    // (i) per-scenario first-order conditions of the closed-form allocation
    Allocation Y = oracle_allocation(inst);
    for (int w = 0; w < m; ++w) {
      Vector g = gradient(U, (xs.col(w) + Y.values().col(w)).eval());
      rep.max_kkt_residual = std::max(rep.max_kkt_residual, g.maxCoeff() - g.minCoeff());
      rep.max_kkt_residual =
          std::max(rep.max_kkt_residual, std::abs(Y.values().col(w).sum() - A));
    }

    // (ii) closed-form density against the numeric dual
    PricingVector q = oracle_density(inst, space);
    auto dual = solve_dual(space, Allocation(xs), U, BudgetSpec{A},
                           ClusterPartition::single(n), cfg);
    rep.max_density_residual = std::max(
        rep.max_density_residual,
        (q.densities() - dual.Q_hat.densities()).cwiseAbs().maxCoeff());

    // (iii) arbitrate the two candidate scale constants against the fixed-Q
    // numeric minimization: bracket without the extra additive beta term
    // (lambda_corrected) vs with it (lambda_printed = corrected * e^-2)
    double lam_corrected = lambda_from_bracket(inst, space, 0.0);
    double lam_printed = lambda_from_bracket(inst, space, inst.beta);
    auto [lam_num, val_num] =
        solve_fixed_q_dual(space, Allocation(xs), U, BudgetSpec{A}, q, cfg);
    (void)val_num;
    rep.max_lambda_relative =
        std::max(rep.max_lambda_relative, std::abs(lam_corrected - lam_num) / lam_num);
    if (std::abs(lam_corrected - lam_num) / lam_num < 1e-8) ++corrected_matches;
    if (std::abs(lam_printed - lam_num) / lam_num < 1e-8) ++printed_matches;
  }

  rep.log.push_back(fmt("kkt residual max %.3e", rep.max_kkt_residual));
  rep.log.push_back(fmt("density residual max %.3e", rep.max_density_residual));
  rep.log.push_back(fmt("lambda relative error max %.3e", rep.max_lambda_relative));
  rep.log.push_back(fmt("scale-constant arbitration: corrected matched %g/50, "
                        "alternative (+beta bracket, factor e^-2) matched %g/50",
                        corrected_matches, printed_matches));
  if (corrected_matches == 50) {
    rep.adopted = "corrected";
  } else if (printed_matches == 50) {
    rep.adopted = "printed";
    rep.log.push_back("oracle_lambda implements the corrected constant but the alternative "
                      "matched: oracle disabled");
  } else {
    rep.adopted = "none";
    rep.log.push_back("neither scale constant matched on all instances: oracle disabled");
  }

  rep.pass = rep.max_kkt_residual <= 1e-9 && rep.max_density_residual <= 1e-8 &&
             rep.adopted == "corrected";
  rep.enabled = rep.pass;
  return rep;
}

}  // namespace msorte
