#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pnlsvi/divergence.hpp"
#include "pnlsvi/function_class.hpp"

namespace pnlsvi {

/// How a bonus table was produced.
enum class BonusProvenance { Exhaustive, BinarySearch, LinearClosedForm };

/// Evaluable bonus b(s,a) >= 0 over all cells.
struct BonusFunction {
  std::vector<double> values;
  BonusProvenance provenance = BonusProvenance::Exhaustive;

  double at(Cell z) const { return values[static_cast<std::size_t>(z)]; }
};

/// max over members f with ||f - center||^2_{sigma,D} <= beta^2 of
/// |f(z) - center(z)|; exact for finite classes. The center is a value table
/// over cells (it need not itself be a member).
double bonus_exhaustive(const FiniteFunctionClass& cls, std::span<const double> center,
                        const WeightedDataNorm& norm, double beta, Cell z,
                        std::int64_t member_budget = kDefaultEnumerationCap);

/// One pass over members producing the bonus at every cell.
BonusFunction bonus_exhaustive_all(const FiniteFunctionClass& cls, std::span<const double> center,
                                   const WeightedDataNorm& norm, double beta,
                                   std::int64_t member_budget = kDefaultEnumerationCap);

/// Closed form for linear classes: sqrt(beta^2 + lambda) * ||phi(z)||_{Sigma^{-1}}.
double bonus_linear(const LinearFunctionClass& cls, const LinearGram& gram, double beta, Cell z);
BonusFunction bonus_linear_all(const LinearFunctionClass& cls, const LinearGram& gram, double beta);

/// Regression-oracle view of a difference class G: minimizes
///   R(g, w) = ||g||^2_{sigma,D} + (w/2) (g(z) - anchor)^2
/// and reports the minimizer's value at z and its squared data norm.
struct DifferenceOracleResult {
  double value_at_query = 0.0;
  double data_norm_sq = 0.0;
};

class DifferenceClassOracle {
 public:
  virtual ~DifferenceClassOracle() = default;
  virtual DifferenceOracleResult minimize(double w, Cell z, double anchor) const = 0;
};

/// G = {sign * (f - center) : f in cls}, scanned exhaustively.
class FiniteCenteredOracle final : public DifferenceClassOracle {
 public:
  FiniteCenteredOracle(const FiniteFunctionClass& cls, std::vector<double> center,
                       WeightedDataNorm norm, double sign = 1.0);
  DifferenceOracleResult minimize(double w, Cell z, double anchor) const override;

 private:
  const FiniteFunctionClass& cls_;
  std::vector<double> center_;
  WeightedDataNorm norm_;
  double sign_;
};

/// G = {sign * phi^T (theta - theta_hat) : ||theta||_2 <= B}; each minimize
/// call is a trust-region-style quadratic solve over the parameter ball.
class LinearCenteredOracle final : public DifferenceClassOracle {
 public:
  LinearCenteredOracle(const LinearFunctionClass& cls, Eigen::VectorXd theta_hat,
                       const DivergenceQuery& q, double sign = 1.0);
  DifferenceOracleResult minimize(double w, Cell z, double anchor) const override;

 private:
  const LinearFunctionClass& cls_;
  Eigen::VectorXd theta_hat_;
  Eigen::MatrixXd data_gram_;  // sum phi phi^T / sigma^2 (no ridge)
  double sign_;
};

struct BinarySearchResult {
  double value = 0.0;
  int oracle_calls = 0;
  int iterations = 0;
  double w_high_initial = 0.0;
  double w_tolerance = 0.0;  // Delta
};

/// Binary search over the penalty weight, bracketing the weight at which the
/// constraint ||g||^2 <= beta^2 becomes active. Terminates once the bracketed
/// values agree within `alpha` or the weight interval shrinks below
/// alpha * beta / (8 (L+1)^3); returns the infeasible-side value. The
/// iteration guard throws on an inconsistent oracle.
BinarySearchResult bonus_binary_search_one_sided(const DifferenceClassOracle& oracle, double beta,
                                                 double alpha, double range, Cell z,
                                                 int iteration_cap = 1000);

/// Two one-sided runs (class and negated class), realizing max |f(z)-center(z)|
/// over the constrained set; never negative.
BinarySearchResult bonus_binary_search(const DifferenceClassOracle& positive,
                                       const DifferenceClassOracle& negative, double beta,
                                       double alpha, double range, Cell z, int iteration_cap = 1000);

}  // namespace pnlsvi
