#ifndef MSORTE_OPTIM_HPP
#define MSORTE_OPTIM_HPP

#include <Eigen/Dense>
#include <functional>

namespace msorte::optim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// log(sum_i exp(args[i])) computed against the max exponent.
double log_sum_exp(const Vector& args);

struct NewtonResult {
  Vector x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton ascent for a strictly concave objective. `grad` and `hess`
/// evaluate derivatives of the objective; the Hessian must be negative
/// definite where queried. Backtracking line search on the objective value.
NewtonResult newton_maximize(const std::function<double(const Vector&)>& f,
                             const std::function<Vector(const Vector&)>& grad,
                             const std::function<Matrix(const Vector&)>& hess,
                             Vector x0, double grad_tol, int max_iter);

struct ScalarRootResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
  bool hit_floor = false;
};

/// Root of a strictly increasing function on (floor, +inf). Expands a
/// bracket geometrically from x0, then runs Newton safeguarded by bisection.
/// `deriv` may return non-finite values; the bisection fallback covers that.
ScalarRootResult increasing_root(const std::function<double(double)>& f,
                                 const std::function<double(double)>& deriv,
                                 double x0, double floor, double tol, int max_iter);

/// Root of a strictly decreasing function on the whole real line. Expands a
/// bracket additively from x0, then bisects.
ScalarRootResult decreasing_root(const std::function<double(double)>& f, double x0, double tol,
                                 int max_iter);

/// Golden-section minimum of a unimodal function on [a, b].
double golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                               double tol, int max_iter = 200);

/// Nelder-Mead maximization, for the nondifferentiable utility family.
NewtonResult nelder_mead_maximize(const std::function<double(const Vector&)>& f, Vector x0,
                                  double initial_step, double tol, int max_iter);

}  // namespace msorte::optim

#endif
