#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "pnlsvi/function_class.hpp"

namespace pnlsvi {

inline constexpr std::int64_t kDefaultPairBudget = 10'000'000;

/// Stage slice of dataset points with a weight function and regularizer;
/// the denominator of the squared divergence at any pair (f1, f2) is
///   sum_k (f1(z_k) - f2(z_k))^2 / sigma_k^2 + lambda.
struct DivergenceQuery {
  std::vector<Cell> data_cells;
  std::vector<double> sigmas;  // sigma(z_k) >= 1
  double lambda = 1.0;

  void validate() const;
};

/// Per-cell denominator weights W(z) = sum_{k: z_k = z} 1/sigma_k^2,
/// precomputed once per (slice, sigma) so the pair supremum costs O(cells)
/// per pair regardless of K.
struct WeightedDataNorm {
  std::vector<double> cell_weight;
  double lambda = 1.0;

  static WeightedDataNorm build(const DivergenceQuery& q, int num_cells);
};

/// Weighted Gram matrix Sigma = sum_k phi(z_k) phi(z_k)^T / sigma_k^2 + lambda I
/// with its Cholesky factorization cached; immutable once built, so it can be
/// shared across many query points and threads.
class LinearGram {
 public:
  LinearGram(const LinearFunctionClass& cls, const DivergenceQuery& q);

  /// phi(z)^T Sigma^{-1} phi(z).
  double mahalanobis_sq(Cell z) const;
  double lambda() const { return lambda_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }

 private:
  Eigen::MatrixXd features_;  // copy of the class features, cells x d
  Eigen::MatrixXd sigma_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double lambda_ = 1.0;
};

/// Squared divergence: sup over member pairs of
///   (f1(z)-f2(z))^2 / (||f1-f2||^2_{sigma,D} + lambda).
/// Always in [0, range^2/lambda] for [0, range]-valued classes; a singleton
/// class yields 0. Throws when the pair count exceeds the budget.
double d2_finite(const FiniteFunctionClass& cls, const WeightedDataNorm& norm, Cell z,
                 std::int64_t pair_budget = kDefaultPairBudget);

/// One pass over all pairs computing the supremum at every cell at once.
std::vector<double> d2_finite_all(const FiniteFunctionClass& cls, const WeightedDataNorm& norm,
                                  std::int64_t pair_budget = kDefaultPairBudget);

/// Closed form for linear classes: phi(z)^T Sigma^{-1} phi(z).
double d2_linear(const LinearFunctionClass& cls, const LinearGram& gram, Cell z);

/// Convenience wrappers taking the raw query.
double d2_finite(const FiniteFunctionClass& cls, const DivergenceQuery& q, Cell z,
                 std::int64_t pair_budget = kDefaultPairBudget);
double d2_linear(const LinearFunctionClass& cls, const DivergenceQuery& q, Cell z);

}  // namespace pnlsvi
