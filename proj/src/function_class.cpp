#include "pnlsvi/function_class.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pnlsvi {

namespace {

double clamp01(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

std::int64_t checked_pow(std::int64_t base, int exp, std::int64_t cap) {
  std::int64_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (out > cap / base) return cap + 1;
    out *= base;
  }
  return out;
}

}  // namespace

FiniteFunctionClass FiniteFunctionClass::from_tensor(int num_states, int num_actions, double range,
                                                     std::vector<std::vector<double>> members) {
  for (const auto& m : members)
    for (double x : m)
      if (x < -1e-12 || x > range + 1e-12)
        throw std::invalid_argument("FiniteFunctionClass: member value outside [0, range]");
  return from_tensor_unchecked(num_states, num_actions, range, std::move(members));
}

FiniteFunctionClass FiniteFunctionClass::from_tensor_unchecked(
    int num_states, int num_actions, double range, std::vector<std::vector<double>> members) {
  if (members.empty()) throw std::invalid_argument("FiniteFunctionClass: empty class");
  FiniteFunctionClass cls;
  cls.num_states_ = num_states;
  cls.num_actions_ = num_actions;
  cls.range_ = range;
  cls.size_ = static_cast<std::int64_t>(members.size());
  const std::size_t n_cells = static_cast<std::size_t>(num_states * num_actions);
  cls.dense_.reserve(members.size() * n_cells);
  for (const auto& m : members) {
    if (m.size() != n_cells) throw std::invalid_argument("FiniteFunctionClass: member size mismatch");
    cls.dense_.insert(cls.dense_.end(), m.begin(), m.end());
  }
  return cls;
}

FiniteFunctionClass FiniteFunctionClass::product_grid(int num_states, int num_actions, int levels,
                                                      double range, std::int64_t enumeration_cap) {
  if (levels < 2) throw std::invalid_argument("product_grid: levels must be >= 2");
  if (range < 0.0) throw std::invalid_argument("product_grid: negative range");
  FiniteFunctionClass cls;
  cls.num_states_ = num_states;
  cls.num_actions_ = num_actions;
  cls.range_ = range;
  const int n_cells = num_states * num_actions;
  if (range == 0.0) {
    // All grid levels coincide; deduplicates to the zero singleton.
    cls.levels_ = 1;
    cls.spacing_ = 0.0;
    cls.size_ = 1;
    cls.digit_stride_.assign(static_cast<std::size_t>(n_cells), 1);
    return cls;
  }
  const std::int64_t size = checked_pow(levels, n_cells, enumeration_cap);
  if (size > enumeration_cap) throw std::invalid_argument("product_grid: enumeration cap exceeded");
  cls.levels_ = levels;
  cls.spacing_ = range / (levels - 1);
  cls.size_ = size;
  cls.digit_stride_.resize(static_cast<std::size_t>(n_cells));
  std::int64_t stride = 1;
  for (int z = n_cells - 1; z >= 0; --z) {
    cls.digit_stride_[static_cast<std::size_t>(z)] = stride;
    stride *= levels;
  }
  return cls;
}

void FiniteFunctionClass::member_values(std::int64_t member, std::span<double> out) const {
  const int n = cells();
  for (Cell z = 0; z < n; ++z) out[static_cast<std::size_t>(z)] = value(member, z);
}

std::vector<double> FiniteFunctionClass::member_table(std::int64_t member) const {
  std::vector<double> out(static_cast<std::size_t>(cells()));
  member_values(member, out);
  return out;
}

LinearFunctionClass::LinearFunctionClass(int num_states, int num_actions, Eigen::MatrixXd features,
                                         double param_bound, double range)
    : num_states_(num_states),
      num_actions_(num_actions),
      features_(std::move(features)),
      param_bound_(param_bound),
      range_(range) {
  if (features_.rows() != num_states * num_actions)
    throw std::invalid_argument("LinearFunctionClass: feature row count mismatch");
  if (param_bound_ < 0.0) throw std::invalid_argument("LinearFunctionClass: negative param bound");
  for (Eigen::Index i = 0; i < features_.rows(); ++i)
    if (features_.row(i).norm() > 1.0 + 1e-9)
      throw std::invalid_argument("LinearFunctionClass: feature norm exceeds 1");
  // One-hot detection: square map with each row a distinct standard basis vector.
  if (features_.rows() == features_.cols()) {
    bool one_hot = true;
    std::vector<bool> seen(static_cast<std::size_t>(features_.cols()), false);
    for (Eigen::Index i = 0; i < features_.rows() && one_hot; ++i) {
      int hits = 0;
      Eigen::Index where = -1;
      for (Eigen::Index j = 0; j < features_.cols(); ++j) {
        const double x = features_(i, j);
        if (x == 1.0) {
          ++hits;
          where = j;
        } else if (x != 0.0) {
          one_hot = false;
          break;
        }
      }
      if (hits != 1 || seen[static_cast<std::size_t>(where)]) one_hot = false;
      else seen[static_cast<std::size_t>(where)] = true;
    }
    one_hot_ = one_hot;
  }
}

LinearFunctionClass LinearFunctionClass::tabular_complete(int num_states, int num_actions,
                                                          double range) {
  const int n = num_states * num_actions;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  return LinearFunctionClass(num_states, num_actions, std::move(phi),
                             range * std::sqrt(static_cast<double>(n)), range);
}

double LinearFunctionClass::value(const Eigen::VectorXd& theta, Cell z) const {
  return clamp01(raw_value(theta, z), 0.0, range_);
}

std::vector<double> LinearFunctionClass::value_table(const Eigen::VectorXd& theta) const {
  std::vector<double> out(static_cast<std::size_t>(cells()));
  Eigen::VectorXd raw = features_ * theta;
  for (int z = 0; z < cells(); ++z) out[static_cast<std::size_t>(z)] = clamp01(raw(z), 0.0, range_);
  return out;
}

std::vector<double> LinearFunctionClass::raw_value_table(const Eigen::VectorXd& theta) const {
  std::vector<double> out(static_cast<std::size_t>(cells()));
  Eigen::VectorXd raw = features_ * theta;
  for (int z = 0; z < cells(); ++z) out[static_cast<std::size_t>(z)] = raw(z);
  return out;
}

namespace {

struct NetGeometry {
  int points_per_axis = 1;
  double spacing = 0.0;
};

NetGeometry net_geometry(const LinearFunctionClass& cls, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("linear_epsilon_net: eps must be positive");
  const double b = cls.param_bound();
  NetGeometry geo;
  if (b == 0.0) return geo;
  const double d = static_cast<double>(cls.dim());
  const int intervals = static_cast<int>(std::ceil(2.0 * b * std::sqrt(d) / eps));
  geo.points_per_axis = intervals + 1;
  geo.spacing = 2.0 * b / intervals;
  return geo;
}

}  // namespace

double linear_epsilon_net_log_size(const LinearFunctionClass& cls, double eps) {
  const NetGeometry geo = net_geometry(cls, eps);
  return cls.dim() * std::log(static_cast<double>(geo.points_per_axis));
}

FiniteFunctionClass linear_epsilon_net(const LinearFunctionClass& cls, double eps, bool clamp_values,
                                       std::int64_t enumeration_cap) {
  const NetGeometry geo = net_geometry(cls, eps);
  const double b = cls.param_bound();
  const int d = cls.dim();

  std::vector<std::vector<double>> members;
  if (b == 0.0) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    members.push_back(clamp_values ? cls.value_table(zero) : cls.raw_value_table(zero));
  } else {
    if (checked_pow(geo.points_per_axis, d, enumeration_cap) > enumeration_cap)
      throw std::invalid_argument("linear_epsilon_net: enumeration cap exceeded");
    const double half_diagonal = 0.5 * geo.spacing * std::sqrt(static_cast<double>(d));
    std::vector<int> digits(static_cast<std::size_t>(d), 0);
    Eigen::VectorXd theta(d);
    bool done = false;
    while (!done) {
      for (int j = 0; j < d; ++j) theta(j) = -b + geo.spacing * digits[static_cast<std::size_t>(j)];
      const double norm = theta.norm();
      if (norm <= b) {
        members.push_back(clamp_values ? cls.value_table(theta) : cls.raw_value_table(theta));
      } else if (norm <= b + half_diagonal) {
        Eigen::VectorXd projected = theta * (b / norm);
        members.push_back(clamp_values ? cls.value_table(projected)
                                       : cls.raw_value_table(projected));
      }
      // Mixed-radix increment.
      int j = d - 1;
      while (j >= 0 && ++digits[static_cast<std::size_t>(j)] == geo.points_per_axis) {
        digits[static_cast<std::size_t>(j)] = 0;
        --j;
      }
      done = (j < 0);
    }
  }
  return FiniteFunctionClass::from_tensor_unchecked(cls.num_states(), cls.num_actions(),
                                                    cls.range(), std::move(members));
}

double best_fit_gap(const FiniteFunctionClass& cls, std::span<const double> target) {
  const int n = cls.cells();
  if (static_cast<int>(target.size()) != n) throw std::invalid_argument("best_fit_gap: size mismatch");
  if (cls.is_product_grid()) {
    // Cells are independent, so min over members of the max deviation is the
    // max over cells of the nearest grid value.
    double gap = 0.0;
    for (Cell z = 0; z < n; ++z) {
      const double t = target[static_cast<std::size_t>(z)];
      double best = std::numeric_limits<double>::infinity();
      if (cls.grid_levels() <= 1) {
        best = std::abs(t);
      } else {
        const double spacing = cls.grid_spacing();
        const double idx = clamp01(std::round(t / spacing), 0.0,
                                   static_cast<double>(cls.grid_levels() - 1));
        for (double cand : {idx - 1.0, idx, idx + 1.0}) {
          if (cand < 0.0 || cand > cls.grid_levels() - 1) continue;
          best = std::min(best, std::abs(cand * spacing - t));
        }
      }
      gap = std::max(gap, best);
    }
    return gap;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t m = 0; m < cls.size(); ++m) {
    double dev = 0.0;
    for (Cell z = 0; z < n; ++z)
      dev = std::max(dev, std::abs(cls.value(m, z) - target[static_cast<std::size_t>(z)]));
    best = std::min(best, dev);
  }
  return best;
}

double best_fit_gap(const LinearFunctionClass& cls, std::span<const double> target, double net_eps) {
  if (cls.is_one_hot()) {
    // Any clamped table is a member; the residual is the out-of-range part.
    double gap = 0.0;
    for (Cell z = 0; z < cls.cells(); ++z) {
      const double t = target[static_cast<std::size_t>(z)];
      gap = std::max(gap, std::abs(t - clamp01(t, 0.0, cls.range())));
    }
    return gap;
  }
  FiniteFunctionClass net = linear_epsilon_net(cls, net_eps, /*clamp_values=*/true);
  return best_fit_gap(net, target);
}

CompletenessReport completeness_gap(const FiniteFunctionClass& cls, const EpisodicMdp& mdp, int h,
                                    const StageValueFunction& next_values) {
  StageActionValueFunction first = bellman_apply(mdp, h, next_values);
  StageActionValueFunction second = bellman_second_moment(mdp, h, next_values);
  return CompletenessReport{best_fit_gap(cls, first.values), best_fit_gap(cls, second.values)};
}

CompletenessReport completeness_gap(const LinearFunctionClass& cls, const EpisodicMdp& mdp, int h,
                                    const StageValueFunction& next_values, double net_eps) {
  StageActionValueFunction first = bellman_apply(mdp, h, next_values);
  StageActionValueFunction second = bellman_second_moment(mdp, h, next_values);
  return CompletenessReport{best_fit_gap(cls, first.values, net_eps),
                            best_fit_gap(cls, second.values, net_eps)};
}

double coverage_constant(const FiniteFunctionClass& cls, const OccupancyMeasure& occupancy, int h,
                         std::int64_t pair_budget) {
  if (cls.size() <= 1) return kKappaSingleton;
  const auto& d = occupancy.d[static_cast<std::size_t>(h)];
  if (static_cast<int>(d.size()) != cls.cells())
    throw std::invalid_argument("coverage_constant: occupancy size mismatch");
  const std::int64_t pairs = cls.size() * (cls.size() - 1) / 2;
  if (pairs > pair_budget) {
    if (cls.is_product_grid()) {
      // Single-cell-differing pairs attain the minimum for product grids.
      double min_occ = std::numeric_limits<double>::infinity();
      for (double x : d) min_occ = std::min(min_occ, x);
      return min_occ;
    }
    throw std::invalid_argument("coverage_constant: pair budget exceeded");
  }
  const int n = cls.cells();
  std::vector<double> fi(static_cast<std::size_t>(n)), fj(static_cast<std::size_t>(n));
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::int64_t i = 0; i < cls.size(); ++i) {
    cls.member_values(i, fi);
    for (std::int64_t j = i + 1; j < cls.size(); ++j) {
      cls.member_values(j, fj);
      double sup = 0.0, mean_sq = 0.0;
      for (int z = 0; z < n; ++z) {
        const double diff = fi[static_cast<std::size_t>(z)] - fj[static_cast<std::size_t>(z)];
        sup = std::max(sup, std::abs(diff));
        mean_sq += d[static_cast<std::size_t>(z)] * diff * diff;
      }
      if (sup == 0.0) continue;  // duplicate tables
      any = true;
      best = std::min(best, mean_sq / (sup * sup));
    }
  }
  return any ? best : kKappaSingleton;
}

double coverage_constant(const LinearFunctionClass& cls, const OccupancyMeasure& occupancy, int h) {
  const auto& d = occupancy.d[static_cast<std::size_t>(h)];
  if (static_cast<int>(d.size()) != cls.cells())
    throw std::invalid_argument("coverage_constant: occupancy size mismatch");
  Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(cls.dim(), cls.dim());
  for (Cell z = 0; z < cls.cells(); ++z)
    second_moment += d[static_cast<std::size_t>(z)] * cls.features().row(z).transpose() *
                     cls.features().row(z);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(second_moment);
  return solver.eigenvalues().minCoeff();
}

}  // namespace pnlsvi
