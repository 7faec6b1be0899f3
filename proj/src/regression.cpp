#include "pnlsvi/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace pnlsvi {

void RegressionProblem::validate() const {
  if (targets.size() != cells.size() || sigmas.size() != cells.size())
    throw std::invalid_argument("RegressionProblem: field size mismatch");
  if (lambda < 0.0) throw std::invalid_argument("RegressionProblem: negative ridge");
  for (Cell z : cells)
    if (z < 0 || z >= num_cells) throw std::invalid_argument("RegressionProblem: cell out of range");
  for (double s : sigmas)
    if (s < 1.0 - 1e-12) throw std::invalid_argument("RegressionProblem: weight below variance floor");
}

GroupedMoments group_problem(const RegressionProblem& prob) {
  GroupedMoments g;
  g.weight.assign(static_cast<std::size_t>(prob.num_cells), 0.0);
  g.moment.assign(static_cast<std::size_t>(prob.num_cells), 0.0);
  for (std::size_t k = 0; k < prob.size(); ++k) {
    const double inv = 1.0 / (prob.sigmas[k] * prob.sigmas[k]);
    g.weight[static_cast<std::size_t>(prob.cells[k])] += inv;
    g.moment[static_cast<std::size_t>(prob.cells[k])] += inv * prob.targets[k];
  }
  return g;
}

std::int64_t weighted_least_squares_finite(const FiniteFunctionClass& cls,
                                           const RegressionProblem& prob) {
  prob.validate();
  if (prob.num_cells != cls.cells())
    throw std::invalid_argument("weighted_least_squares_finite: cell count mismatch");
  if (prob.size() == 0) return 0;
  const GroupedMoments g = group_problem(prob);
  const int n = cls.cells();

  if (cls.is_product_grid() && cls.grid_levels() > 1) {
    // The grouped objective separates per cell; the per-cell argmin with the
    // lowest level on ties assembles to the lowest global member index.
    std::int64_t member = 0;
    for (Cell z = 0; z < n; ++z) {
      const double w = g.weight[static_cast<std::size_t>(z)];
      const double u = g.moment[static_cast<std::size_t>(z)];
      int best_level = 0;
      double best_obj = 0.0;
      for (int level = 0; level < cls.grid_levels(); ++level) {
        const double f = cls.grid_spacing() * level;
        const double obj = w * f * f - 2.0 * u * f;
        if (level == 0 || obj < best_obj) {
          best_obj = obj;
          best_level = level;
        }
      }
      member = member * cls.grid_levels() + best_level;
    }
    return member;
  }

  std::int64_t best_member = 0;
  double best_obj = std::numeric_limits<double>::infinity();
  for (std::int64_t m = 0; m < cls.size(); ++m) {
    double obj = 0.0;
    for (Cell z = 0; z < n; ++z) {
      const double f = cls.value(m, z);
      obj += g.weight[static_cast<std::size_t>(z)] * f * f -
             2.0 * g.moment[static_cast<std::size_t>(z)] * f;
    }
    if (obj < best_obj) {
      best_obj = obj;
      best_member = m;
    }
  }
  return best_member;
}

double weighted_objective(const FiniteFunctionClass& cls, std::int64_t member,
                          const RegressionProblem& prob) {
  double obj = 0.0;
  for (std::size_t k = 0; k < prob.size(); ++k) {
    const double r = cls.value(member, prob.cells[k]) - prob.targets[k];
    obj += r * r / (prob.sigmas[k] * prob.sigmas[k]);
  }
  return obj;
}

RidgeFit weighted_ridge_linear(const LinearFunctionClass& cls, const RegressionProblem& prob) {
  prob.validate();
  if (prob.num_cells != cls.cells())
    throw std::invalid_argument("weighted_ridge_linear: cell count mismatch");
  const int d = cls.dim();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < prob.size(); ++k) {
    const double inv = 1.0 / (prob.sigmas[k] * prob.sigmas[k]);
    const auto phi = cls.features().row(prob.cells[k]);
    gram.noalias() += inv * phi.transpose() * phi;
    rhs.noalias() += (inv * prob.targets[k]) * phi.transpose();
  }
  Eigen::MatrixXd system = gram + prob.lambda * Eigen::MatrixXd::Identity(d, d);
  if (prob.lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
      throw std::invalid_argument("weighted_ridge_linear: singular system with lambda = 0");
  }

  RidgeFit fit;
  fit.theta = system.ldlt().solve(rhs);
  fit.normal_equation_residual = (system * fit.theta - rhs).cwiseAbs().maxCoeff();
  const double norm = fit.theta.norm();
  if (norm > cls.param_bound()) {
    fit.theta *= cls.param_bound() / norm;
    fit.projected = true;
  }
  return fit;
}

}  // namespace pnlsvi
