#ifndef MSORTE_TYPES_HPP
#define MSORTE_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace msorte {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

class NondifferentiableError : public std::runtime_error {
public:
  explicit NondifferentiableError(const std::string& what) : std::runtime_error(what) {}
};

/// Finite outcome set with strictly positive reference probabilities.
class ScenarioSpace {
public:
  ScenarioSpace(std::vector<std::string> labels, Vector probs);

  int size() const { return static_cast<int>(probs_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const Vector& probs() const { return probs_; }
  double prob(int omega) const { return probs_[omega]; }

private:
  std::vector<std::string> labels_;
  Vector probs_;
};

/// Agents x scenarios matrix of random positions. Row j is agent j's
/// position across scenarios.
class Allocation {
public:
  Allocation() = default;
  explicit Allocation(Matrix values);

  int agents() const { return static_cast<int>(values_.rows()); }
  int scenarios() const { return static_cast<int>(values_.cols()); }
  const Matrix& values() const { return values_; }
  double operator()(int j, int omega) const { return values_(j, omega); }
  Vector column(int omega) const { return values_.col(omega); }

private:
  Matrix values_;
};

/// N density rows dQ^j/dP, each normalized against the reference measure.
class PricingVector {
public:
  PricingVector() = default;
  PricingVector(const ScenarioSpace& space, Matrix densities);

  int agents() const { return static_cast<int>(densities_.rows()); }
  int scenarios() const { return static_cast<int>(densities_.cols()); }
  const Matrix& densities() const { return densities_; }
  double operator()(int j, int omega) const { return densities_(j, omega); }
  /// True iff every density is strictly positive (Q ~ P).
  bool equivalent() const { return equivalent_; }

private:
  Matrix densities_;
  bool equivalent_ = false;
};

/// Disjoint index groups covering {0,...,N-1}.
class ClusterPartition {
public:
  /// Single group covering all agents.
  static ClusterPartition single(int n_agents);
  ClusterPartition(int n_agents, std::vector<std::vector<int>> groups);

  int agents() const { return n_agents_; }
  int groups() const { return static_cast<int>(groups_.size()); }
  const std::vector<int>& group(int g) const { return groups_[g]; }
  int group_of(int agent) const { return group_of_[agent]; }

private:
  int n_agents_;
  std::vector<std::vector<int>> groups_;
  std::vector<int> group_of_;
};

struct BudgetSpec {
  double A = 0.0;
};

/// E_Q[Y] componentwise: component j = sum_w p(w) d_j(w) Y_j(w),
/// accumulated in ascending scenario order.
Vector expectation(const ScenarioSpace& space, const Allocation& Y, const PricingVector& Q);

/// P-expectation of each row.
Vector expectation(const ScenarioSpace& space, const Allocation& Y);

/// Per-scenario column sums.
Vector aggregate(const Allocation& Y);

}  // namespace msorte

#endif
