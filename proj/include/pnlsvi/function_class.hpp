#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pnlsvi/mdp.hpp"

namespace pnlsvi {

inline constexpr std::int64_t kDefaultEnumerationCap = 1'000'000;
inline constexpr double kKappaSingleton = std::numeric_limits<double>::infinity();

/// Enumerable family of functions S x A -> [0, L].
///
/// Two storage forms behind one interface: an explicit member-value tensor,
/// or the implicit uniform product grid (every cell independently takes one
/// of `levels` equally spaced values in [0, L]; member index is the
/// mixed-radix digit string with cell 0 most significant, so the lowest
/// member index is the lexicographically smallest value table).
class FiniteFunctionClass {
 public:
  static FiniteFunctionClass from_tensor(int num_states, int num_actions, double range,
                                         std::vector<std::vector<double>> members);
  /// Same as from_tensor but skips the [0, range] value check; used for
  /// nets of raw (unclamped) linear classes whose values may be negative.
  static FiniteFunctionClass from_tensor_unchecked(int num_states, int num_actions, double range,
                                                   std::vector<std::vector<double>> members);
  static FiniteFunctionClass product_grid(int num_states, int num_actions, int levels, double range,
                                          std::int64_t enumeration_cap = kDefaultEnumerationCap);

  std::int64_t size() const { return size_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int cells() const { return num_states_ * num_actions_; }
  double range() const { return range_; }
  bool is_product_grid() const { return levels_ > 0; }
  int grid_levels() const { return levels_; }
  double grid_spacing() const { return spacing_; }

  double value(std::int64_t member, Cell z) const {
    if (levels_ > 0)
      return spacing_ * static_cast<double>((member / digit_stride_[static_cast<std::size_t>(z)]) %
                                            levels_);
    return dense_[static_cast<std::size_t>(member) * static_cast<std::size_t>(cells()) +
                  static_cast<std::size_t>(z)];
  }

  void member_values(std::int64_t member, std::span<double> out) const;
  std::vector<double> member_table(std::int64_t member) const;

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  double range_ = 0.0;
  std::int64_t size_ = 0;
  // Dense form.
  std::vector<double> dense_;
  // Product-grid form (levels_ > 0).
  int levels_ = 0;
  double spacing_ = 0.0;
  std::vector<std::int64_t> digit_stride_;  // levels^(cells-1-z) per cell
};

/// Linearly parameterized family f(s,a) = clamp(<phi(s,a), theta>, 0, L)
/// over the parameter ball ||theta||_2 <= B. Feature rows have norm <= 1.
class LinearFunctionClass {
 public:
  LinearFunctionClass(int num_states, int num_actions, Eigen::MatrixXd features,
                      double param_bound, double range);

  /// One-hot feature per cell with B = range * sqrt(S*A); contains every
  /// table S x A -> [0, range] exactly, so its completeness gap is zero.
  static LinearFunctionClass tabular_complete(int num_states, int num_actions, double range);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int cells() const { return num_states_ * num_actions_; }
  int dim() const { return static_cast<int>(features_.cols()); }
  double param_bound() const { return param_bound_; }
  double range() const { return range_; }
  bool is_one_hot() const { return one_hot_; }
  const Eigen::MatrixXd& features() const { return features_; }
  Eigen::VectorXd feature(Cell z) const { return features_.row(z).transpose(); }

  double raw_value(const Eigen::VectorXd& theta, Cell z) const {
    return features_.row(z).dot(theta);
  }
  double value(const Eigen::VectorXd& theta, Cell z) const;
  std::vector<double> value_table(const Eigen::VectorXd& theta) const;
  std::vector<double> raw_value_table(const Eigen::VectorXd& theta) const;

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  Eigen::MatrixXd features_;  // cells x d
  double param_bound_ = 0.0;
  double range_ = 0.0;
  bool one_hot_ = false;
};

/// Finite covering of a linear class: axis-aligned parameter grid with
/// per-axis spacing <= eps/sqrt(d) intersected with the norm ball (grid
/// points just outside are projected onto the sphere). Every class member
/// is within eps of some net member in sup norm.
///
/// With clamp_values the net materializes Assumption-style [0, L] values;
/// without it, raw linear values (the covering used for the elliptical-norm
/// comparisons).
FiniteFunctionClass linear_epsilon_net(const LinearFunctionClass& cls, double eps,
                                       bool clamp_values = true,
                                       std::int64_t enumeration_cap = kDefaultEnumerationCap);

/// ln(member count) of the eps-net without materializing it.
double linear_epsilon_net_log_size(const LinearFunctionClass& cls, double eps);

/// min over members of max_z |f(z) - target(z)|.
double best_fit_gap(const FiniteFunctionClass& cls, std::span<const double> target);
double best_fit_gap(const LinearFunctionClass& cls, std::span<const double> target, double net_eps);

struct CompletenessReport {
  double first_moment_gap = 0.0;   // vs [T_h V]
  double second_moment_gap = 0.0;  // vs [T2_h V]
};

/// Gap of the class against the Bellman images of `next_values`.
CompletenessReport completeness_gap(const FiniteFunctionClass& cls, const EpisodicMdp& mdp, int h,
                                    const StageValueFunction& next_values);
CompletenessReport completeness_gap(const LinearFunctionClass& cls, const EpisodicMdp& mdp, int h,
                                    const StageValueFunction& next_values, double net_eps);

/// min over distinct member pairs of E_{d_h}[(f1-f2)^2] / ||f1-f2||_inf^2.
/// Identical members are skipped; a singleton class returns +infinity.
double coverage_constant(const FiniteFunctionClass& cls, const OccupancyMeasure& occupancy, int h,
                         std::int64_t pair_budget = 10'000'000);
/// Linear route: lambda_min(E_{d_h}[phi phi^T]).
double coverage_constant(const LinearFunctionClass& cls, const OccupancyMeasure& occupancy, int h);

}  // namespace pnlsvi
