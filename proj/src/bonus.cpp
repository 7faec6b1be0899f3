#include "pnlsvi/bonus.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace pnlsvi {

namespace {

void check_center(const FiniteFunctionClass& cls, std::span<const double> center,
                  const WeightedDataNorm& norm) {
  if (static_cast<int>(center.size()) != cls.cells() ||
      static_cast<int>(norm.cell_weight.size()) != cls.cells())
    throw std::invalid_argument("bonus: table size mismatch");
}

}  // namespace

BonusFunction bonus_exhaustive_all(const FiniteFunctionClass& cls, std::span<const double> center,
                                   const WeightedDataNorm& norm, double beta,
                                   std::int64_t member_budget) {
  check_center(cls, center, norm);
  if (cls.size() > member_budget)
    throw std::invalid_argument("bonus_exhaustive: enumeration budget exceeded");
  const int n = cls.cells();
  const double beta_sq = beta * beta;
  BonusFunction bonus;
  bonus.provenance = BonusProvenance::Exhaustive;
  bonus.values.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<double> f(static_cast<std::size_t>(n));
  for (std::int64_t m = 0; m < cls.size(); ++m) {
    cls.member_values(m, f);
    double cost = 0.0;
    for (int z = 0; z < n; ++z) {
      const double diff = f[static_cast<std::size_t>(z)] - center[static_cast<std::size_t>(z)];
      cost += norm.cell_weight[static_cast<std::size_t>(z)] * diff * diff;
    }
    if (cost > beta_sq) continue;
    for (int z = 0; z < n; ++z) {
      const double dev =
          std::abs(f[static_cast<std::size_t>(z)] - center[static_cast<std::size_t>(z)]);
      if (dev > bonus.values[static_cast<std::size_t>(z)])
        bonus.values[static_cast<std::size_t>(z)] = dev;
    }
  }
  return bonus;
}

double bonus_exhaustive(const FiniteFunctionClass& cls, std::span<const double> center,
                        const WeightedDataNorm& norm, double beta, Cell z,
                        std::int64_t member_budget) {
  check_center(cls, center, norm);
  if (z < 0 || z >= cls.cells()) throw std::invalid_argument("bonus_exhaustive: cell out of range");
  if (cls.size() > member_budget)
    throw std::invalid_argument("bonus_exhaustive: enumeration budget exceeded");
  const int n = cls.cells();
  const double beta_sq = beta * beta;
  double best = 0.0;
  std::vector<double> f(static_cast<std::size_t>(n));
  for (std::int64_t m = 0; m < cls.size(); ++m) {
    cls.member_values(m, f);
    double cost = 0.0;
    for (int c = 0; c < n; ++c) {
      const double diff = f[static_cast<std::size_t>(c)] - center[static_cast<std::size_t>(c)];
      cost += norm.cell_weight[static_cast<std::size_t>(c)] * diff * diff;
    }
    if (cost > beta_sq) continue;
    best = std::max(best,
                    std::abs(f[static_cast<std::size_t>(z)] - center[static_cast<std::size_t>(z)]));
  }
  return best;
}

double bonus_linear(const LinearFunctionClass& cls, const LinearGram& gram, double beta, Cell z) {
  return std::sqrt(beta * beta + gram.lambda()) * std::sqrt(d2_linear(cls, gram, z));
}

BonusFunction bonus_linear_all(const LinearFunctionClass& cls, const LinearGram& gram, double beta) {
  BonusFunction bonus;
  bonus.provenance = BonusProvenance::LinearClosedForm;
  bonus.values.resize(static_cast<std::size_t>(cls.cells()));
  for (Cell z = 0; z < cls.cells(); ++z)
    bonus.values[static_cast<std::size_t>(z)] = bonus_linear(cls, gram, beta, z);
  return bonus;
}

FiniteCenteredOracle::FiniteCenteredOracle(const FiniteFunctionClass& cls,
                                           std::vector<double> center, WeightedDataNorm norm,
                                           double sign)
    : cls_(cls), center_(std::move(center)), norm_(std::move(norm)), sign_(sign) {
  if (static_cast<int>(center_.size()) != cls.cells())
    throw std::invalid_argument("FiniteCenteredOracle: center size mismatch");
}

DifferenceOracleResult FiniteCenteredOracle::minimize(double w, Cell z, double anchor) const {
  const int n = cls_.cells();
  std::vector<double> f(static_cast<std::size_t>(n));
  double best_obj = std::numeric_limits<double>::infinity();
  DifferenceOracleResult best;
  for (std::int64_t m = 0; m < cls_.size(); ++m) {
    cls_.member_values(m, f);
    double norm_sq = 0.0;
    for (int c = 0; c < n; ++c) {
      const double g = sign_ * (f[static_cast<std::size_t>(c)] - center_[static_cast<std::size_t>(c)]);
      norm_sq += norm_.cell_weight[static_cast<std::size_t>(c)] * g * g;
    }
    const double gz =
        sign_ * (f[static_cast<std::size_t>(z)] - center_[static_cast<std::size_t>(z)]);
    const double obj = norm_sq + 0.5 * w * (gz - anchor) * (gz - anchor);
    if (obj < best_obj) {
      best_obj = obj;
      best = DifferenceOracleResult{gz, norm_sq};
    }
  }
  return best;
}

LinearCenteredOracle::LinearCenteredOracle(const LinearFunctionClass& cls,
                                           Eigen::VectorXd theta_hat, const DivergenceQuery& q,
                                           double sign)
    : cls_(cls), theta_hat_(std::move(theta_hat)), sign_(sign) {
  q.validate();
  const int d = cls.dim();
  if (theta_hat_.size() != d)
    throw std::invalid_argument("LinearCenteredOracle: center dimension mismatch");
  data_gram_ = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < q.data_cells.size(); ++k) {
    const double inv = 1.0 / (q.sigmas[k] * q.sigmas[k]);
    const auto phi = cls.features().row(q.data_cells[k]);
    data_gram_.noalias() += inv * phi.transpose() * phi;
  }
}

DifferenceOracleResult LinearCenteredOracle::minimize(double w, Cell z, double anchor) const {
  // g = sign * psi^T (theta - theta_hat) with psi = phi(z). In theta:
  //   J = (theta-theta_hat)^T A (theta-theta_hat) + (w/2)(sign psi^T (theta-theta_hat) - anchor)^2
  // which is 0.5 theta^T Q theta + b^T theta + const with
  //   Q = 2A + w psi psi^T,  b = -Q theta_hat - w anchor sign psi.
  const int d = cls_.dim();
  Eigen::VectorXd psi = cls_.feature(z);
  Eigen::MatrixXd q_mat = 2.0 * data_gram_ + w * psi * psi.transpose();
  Eigen::VectorXd b = -(q_mat * theta_hat_) - (w * anchor * sign_) * psi;
  const double scale = std::max(q_mat.trace(), 1.0);
  Eigen::MatrixXd q_reg = q_mat + (1e-12 * scale) * Eigen::MatrixXd::Identity(d, d);

  Eigen::VectorXd theta = q_reg.ldlt().solve(-b);
  const double ball = cls_.param_bound();
  if (theta.norm() > ball) {
    // Ball-constrained quadratic: bisect the multiplier nu in (Q + nu I) x = -b
    // until ||x|| = ball (norm is monotone decreasing in nu).
    double lo = 0.0, hi = 1.0;
    auto solve_at = [&](double nu) {
      return Eigen::VectorXd(
          (q_reg + nu * Eigen::MatrixXd::Identity(d, d)).ldlt().solve(-b));
    };
    while (solve_at(hi).norm() > ball) {
      hi *= 4.0;
      if (hi > 1e18) break;
    }
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (solve_at(mid).norm() > ball)
        lo = mid;
      else
        hi = mid;
    }
    theta = solve_at(hi);
  }

  Eigen::VectorXd u = theta - theta_hat_;
  DifferenceOracleResult res;
  res.value_at_query = sign_ * psi.dot(u);
  res.data_norm_sq = u.dot(data_gram_ * u);
  return res;
}

BinarySearchResult bonus_binary_search_one_sided(const DifferenceClassOracle& oracle, double beta,
                                                 double alpha, double range, Cell z,
                                                 int iteration_cap) {
  if (beta <= 0.0) throw std::invalid_argument("bonus_binary_search: beta must be positive");
  if (alpha <= 0.0) throw std::invalid_argument("bonus_binary_search: alpha must be positive");
  const double l1 = range + 1.0;
  const double anchor = 2.0 * l1;
  const double beta_sq = beta * beta;

  BinarySearchResult res;
  res.w_high_initial = beta / (alpha * l1);
  res.w_tolerance = alpha * beta / (8.0 * l1 * l1 * l1);

  double w_low = 0.0, z_low = 0.0;
  double w_high = res.w_high_initial;
  DifferenceOracleResult first = oracle.minimize(w_high, z, anchor);
  double z_high = first.value_at_query;
  res.oracle_calls = 1;

  while (std::abs(z_high - z_low) > alpha && std::abs(w_high - w_low) > res.w_tolerance) {
    if (++res.iterations > iteration_cap)
      throw std::runtime_error("bonus_binary_search: iteration cap hit (oracle inconsistency)");
    const double w_mid = 0.5 * (w_high + w_low);
    DifferenceOracleResult mid = oracle.minimize(w_mid, z, anchor);
    ++res.oracle_calls;
    if (mid.data_norm_sq > beta_sq) {
      w_high = w_mid;
      z_high = mid.value_at_query;
    } else {
      w_low = w_mid;
      z_low = mid.value_at_query;
    }
  }
  res.value = z_high;
  return res;
}

BinarySearchResult bonus_binary_search(const DifferenceClassOracle& positive,
                                       const DifferenceClassOracle& negative, double beta,
                                       double alpha, double range, Cell z, int iteration_cap) {
  BinarySearchResult up = bonus_binary_search_one_sided(positive, beta, alpha, range, z, iteration_cap);
  BinarySearchResult down =
      bonus_binary_search_one_sided(negative, beta, alpha, range, z, iteration_cap);
  BinarySearchResult res = up.value >= down.value ? up : down;
  res.value = std::max({up.value, down.value, 0.0});
  res.oracle_calls = up.oracle_calls + down.oracle_calls;
  res.iterations = up.iterations + down.iterations;
  return res;
}

}  // namespace pnlsvi
