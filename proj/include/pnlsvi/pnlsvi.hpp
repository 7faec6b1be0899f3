#pragma once

#include <variant>
#include <vector>

#include "pnlsvi/bonus.hpp"
#include "pnlsvi/confidence.hpp"
#include "pnlsvi/function_class.hpp"
#include "pnlsvi/offline_data.hpp"
#include "pnlsvi/regression.hpp"

namespace pnlsvi {

using FunctionClassHandle = std::variant<FiniteFunctionClass, LinearFunctionClass>;

/// Hypothesis family attached to one stage: the value class (range H-h) the
/// planning regressions and bonuses operate over, plus a companion instance
/// of the same family sized for second-moment targets (range (H-h)^2).
/// Misspecification gaps are carried per use: the first-moment gap enters
/// the pessimism subtraction and the first-moment radii, the second-moment
/// gap enters the second-moment radius only.
struct StageClasses {
  FunctionClassHandle value;
  FunctionClassHandle moment;
  double epsilon_first = 0.0;
  double epsilon_second = 0.0;
};

enum class BonusMode { Auto, Exhaustive, BinarySearch, LinearClosedForm };

struct PnlsviConfig {
  double delta = 0.1;
  double lambda = 1.0;
  double c_var = 1.0;
  /// Coverage constant measured by the harness from behavior occupancies.
  double kappa = 1.0;
  RadiusOverrides overrides;
  BonusMode bonus_mode = BonusMode::Auto;
  double binary_search_alpha = 1e-3;
  /// Binary search on non-convex finite classes is heuristic; off by default.
  bool allow_nonconvex_binary_search = false;
  /// Net resolution defining ln N for linear classes.
  double net_eps = 0.05;
};

/// Per-cell value table of one fitted function.
using ValueTable = std::vector<double>;

struct VariancePhaseOutput {
  std::vector<ValueTable> first_moment;    // f-bar_h
  std::vector<ValueTable> second_moment;   // g-bar_h
  std::vector<ValueTable> crude_values;    // f-check_h, clipped pessimistic fit
  std::vector<BonusFunction> bonus;        // b-bar_h
  std::vector<ValueTable> sigma_hat;       // per-cell weights in [1, H]
};

struct PnlsviOutput {
  VariancePhaseOutput variance;
  std::vector<ValueTable> weighted_fit;  // f-tilde_h
  std::vector<BonusFunction> bonus;      // b_h
  std::vector<ValueTable> pessimistic;   // f-hat_h
  Policy policy;                         // greedy on f-hat, lowest-index ties
  ConfidenceParams params;
};

int class_num_states(const FunctionClassHandle& handle);
int class_num_actions(const FunctionClassHandle& handle);
double class_range(const FunctionClassHandle& handle);
/// ln(member count); linear classes report the size of their eps-net.
double class_log_size(const FunctionClassHandle& handle, double net_eps);

/// Assembles the radius inputs from the stage classes and the measured
/// coverage constant. log N is the max over stages (value and moment
/// instances both counted); N_b is the member pair count.
ConfidenceInputs make_confidence_inputs(const std::vector<StageClasses>& classes, int num_episodes,
                                        const PnlsviConfig& config);

/// Lines 3-8: unweighted first/second moment regressions on the held-out
/// half, a crude pessimistic fit, and the truncated variance estimator.
VariancePhaseOutput variance_estimation_phase(const OfflineDataset& variance_half,
                                              const std::vector<StageClasses>& classes,
                                              const ConfidenceParams& params,
                                              const PnlsviConfig& config);

/// Lines 10-15: variance-weighted regression, bonus subtraction, clipping,
/// greedy policy extraction. Pass all-ones sigma tables for the unweighted
/// ablation.
PnlsviOutput pessimistic_planning_phase(const OfflineDataset& planning_half,
                                        const std::vector<ValueTable>& sigma_hat,
                                        const std::vector<StageClasses>& classes,
                                        const ConfidenceParams& params, const PnlsviConfig& config,
                                        VariancePhaseOutput variance_output);

/// The full two-phase algorithm. Consumes only the dataset halves, the
/// classes, and scalar configuration: there is no way to pass dynamics in.
PnlsviOutput run_pnlsvi(const SplitDataset& split, const std::vector<StageClasses>& classes,
                        const PnlsviConfig& config);

}  // namespace pnlsvi
