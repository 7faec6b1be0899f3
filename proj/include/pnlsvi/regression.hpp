#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "pnlsvi/function_class.hpp"

namespace pnlsvi {

/// Weighted least-squares instance over one stage slice. Weights are the
/// sigma values themselves; the objective divides squared residuals by
/// sigma^2. The variance floor keeps every sigma >= 1.
struct RegressionProblem {
  std::vector<Cell> cells;
  std::vector<double> targets;
  std::vector<double> sigmas;
  double lambda = 0.0;
  int num_cells = 0;

  std::size_t size() const { return cells.size(); }
  void validate() const;
};

/// Per-cell sufficient statistics of a regression problem:
///   weight[z]   = sum_{k: z_k=z} 1/sigma_k^2
///   moment[z]   = sum_{k: z_k=z} y_k/sigma_k^2
/// The weighted objective of any function f that depends on z only is
///   sum_z (weight[z] f(z)^2 - 2 moment[z] f(z)) + const.
struct GroupedMoments {
  std::vector<double> weight;
  std::vector<double> moment;
};

GroupedMoments group_problem(const RegressionProblem& prob);

/// argmin over members of the weighted squared error; ties broken by lowest
/// member index; an empty sample returns member 0.
std::int64_t weighted_least_squares_finite(const FiniteFunctionClass& cls,
                                           const RegressionProblem& prob);

/// Exact weighted objective of one member (used for optimality certificates).
double weighted_objective(const FiniteFunctionClass& cls, std::int64_t member,
                          const RegressionProblem& prob);

struct RidgeFit {
  Eigen::VectorXd theta;
  bool projected = false;            // rescaled onto the parameter ball
  double normal_equation_residual = 0.0;  // ||(G+λI)θ̂ - b||_inf before projection
};

/// theta = (sum phi phi^T / sigma^2 + lambda I)^{-1} sum phi y / sigma^2,
/// rescaled to the norm ball if it exits. lambda = 0 requires a nonsingular
/// weighted Gram matrix.
RidgeFit weighted_ridge_linear(const LinearFunctionClass& cls, const RegressionProblem& prob);

}  // namespace pnlsvi
