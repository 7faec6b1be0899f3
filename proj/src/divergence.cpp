#include "pnlsvi/divergence.hpp"

#include <cmath>
#include <stdexcept>

namespace pnlsvi {

void DivergenceQuery::validate() const {
  if (sigmas.size() != data_cells.size())
    throw std::invalid_argument("DivergenceQuery: field size mismatch");
  if (lambda <= 0.0) throw std::invalid_argument("DivergenceQuery: lambda must be positive");
  for (double s : sigmas)
    if (s < 1.0 - 1e-12) throw std::invalid_argument("DivergenceQuery: weight below 1");
}

WeightedDataNorm WeightedDataNorm::build(const DivergenceQuery& q, int num_cells) {
  q.validate();
  WeightedDataNorm norm;
  norm.lambda = q.lambda;
  norm.cell_weight.assign(static_cast<std::size_t>(num_cells), 0.0);
  for (std::size_t k = 0; k < q.data_cells.size(); ++k) {
    const Cell z = q.data_cells[k];
    if (z < 0 || z >= num_cells) throw std::invalid_argument("DivergenceQuery: cell out of range");
    norm.cell_weight[static_cast<std::size_t>(z)] += 1.0 / (q.sigmas[k] * q.sigmas[k]);
  }
  return norm;
}

LinearGram::LinearGram(const LinearFunctionClass& cls, const DivergenceQuery& q)
    : features_(cls.features()), lambda_(q.lambda) {
  q.validate();
  const int d = cls.dim();
  sigma_ = lambda_ * Eigen::MatrixXd::Identity(d, d);
  for (std::size_t k = 0; k < q.data_cells.size(); ++k) {
    const Cell z = q.data_cells[k];
    if (z < 0 || z >= cls.cells()) throw std::invalid_argument("LinearGram: cell out of range");
    const double inv = 1.0 / (q.sigmas[k] * q.sigmas[k]);
    const auto phi = features_.row(z);
    sigma_.noalias() += inv * phi.transpose() * phi;
  }
  llt_.compute(sigma_);
  if (llt_.info() != Eigen::Success)
    throw std::runtime_error("LinearGram: factorization failed");
}

double LinearGram::mahalanobis_sq(Cell z) const {
  Eigen::VectorXd phi = features_.row(z).transpose();
  return phi.dot(llt_.solve(phi));
}

namespace {

void check_budget(const FiniteFunctionClass& cls, std::int64_t pair_budget) {
  const std::int64_t pairs = cls.size() * (cls.size() - 1) / 2;
  if (pairs > pair_budget) throw std::invalid_argument("d2_finite: pair budget exceeded");
}

}  // namespace

std::vector<double> d2_finite_all(const FiniteFunctionClass& cls, const WeightedDataNorm& norm,
                                  std::int64_t pair_budget) {
  const int n = cls.cells();
  if (static_cast<int>(norm.cell_weight.size()) != n)
    throw std::invalid_argument("d2_finite: weight table size mismatch");
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  if (cls.size() <= 1) return out;  // empty pair set: supremum is 0
  check_budget(cls, pair_budget);

  std::vector<double> fi(static_cast<std::size_t>(n)), fj(static_cast<std::size_t>(n)),
      diff(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < cls.size(); ++i) {
    cls.member_values(i, fi);
    for (std::int64_t j = i + 1; j < cls.size(); ++j) {
      cls.member_values(j, fj);
      double den = norm.lambda;
      for (int z = 0; z < n; ++z) {
        diff[static_cast<std::size_t>(z)] =
            fi[static_cast<std::size_t>(z)] - fj[static_cast<std::size_t>(z)];
        den += norm.cell_weight[static_cast<std::size_t>(z)] * diff[static_cast<std::size_t>(z)] *
               diff[static_cast<std::size_t>(z)];
      }
      for (int z = 0; z < n; ++z) {
        const double num = diff[static_cast<std::size_t>(z)] * diff[static_cast<std::size_t>(z)];
        const double ratio = num / den;
        if (ratio > out[static_cast<std::size_t>(z)]) out[static_cast<std::size_t>(z)] = ratio;
      }
    }
  }
  return out;
}

double d2_finite(const FiniteFunctionClass& cls, const WeightedDataNorm& norm, Cell z,
                 std::int64_t pair_budget) {
  const int n = cls.cells();
  if (z < 0 || z >= n) throw std::invalid_argument("d2_finite: query cell out of range");
  if (static_cast<int>(norm.cell_weight.size()) != n)
    throw std::invalid_argument("d2_finite: weight table size mismatch");
  if (cls.size() <= 1) return 0.0;
  check_budget(cls, pair_budget);

  std::vector<double> fi(static_cast<std::size_t>(n)), fj(static_cast<std::size_t>(n));
  double best = 0.0;
  for (std::int64_t i = 0; i < cls.size(); ++i) {
    cls.member_values(i, fi);
    for (std::int64_t j = i + 1; j < cls.size(); ++j) {
      cls.member_values(j, fj);
      const double dq = fi[static_cast<std::size_t>(z)] - fj[static_cast<std::size_t>(z)];
      if (dq == 0.0) continue;
      double den = norm.lambda;
      for (int c = 0; c < n; ++c) {
        const double diff = fi[static_cast<std::size_t>(c)] - fj[static_cast<std::size_t>(c)];
        den += norm.cell_weight[static_cast<std::size_t>(c)] * diff * diff;
      }
      best = std::max(best, dq * dq / den);
    }
  }
  return best;
}

double d2_linear(const LinearFunctionClass& cls, const LinearGram& gram, Cell z) {
  if (z < 0 || z >= cls.cells()) throw std::invalid_argument("d2_linear: query cell out of range");
  return gram.mahalanobis_sq(z);
}

double d2_finite(const FiniteFunctionClass& cls, const DivergenceQuery& q, Cell z,
                 std::int64_t pair_budget) {
  return d2_finite(cls, WeightedDataNorm::build(q, cls.cells()), z, pair_budget);
}

double d2_linear(const LinearFunctionClass& cls, const DivergenceQuery& q, Cell z) {
  return d2_linear(cls, LinearGram(cls, q), z);
}

}  // namespace pnlsvi
