#include "pnlsvi/pnlsvi.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace pnlsvi {

namespace {

struct StageSlice {
  std::vector<Cell> cells;
  std::vector<double> rewards;
  std::vector<int> next_states;
};

StageSlice make_slice(const OfflineDataset& data, int h, int num_actions) {
  StageSlice slice;
  slice.cells.reserve(static_cast<std::size_t>(data.num_episodes));
  slice.rewards.reserve(static_cast<std::size_t>(data.num_episodes));
  slice.next_states.reserve(static_cast<std::size_t>(data.num_episodes));
  for (int k = 0; k < data.num_episodes; ++k) {
    const TransitionRecord& rec = data.at(k, h);
    slice.cells.push_back(rec.state * num_actions + rec.action);
    slice.rewards.push_back(rec.reward);
    slice.next_states.push_back(rec.next_state);
  }
  return slice;
}

std::vector<double> state_values(const ValueTable& table, int num_states, int num_actions) {
  std::vector<double> v(static_cast<std::size_t>(num_states));
  for (int s = 0; s < num_states; ++s) {
    double best = table[static_cast<std::size_t>(s * num_actions)];
    for (int a = 1; a < num_actions; ++a)
      best = std::max(best, table[static_cast<std::size_t>(s * num_actions + a)]);
    v[static_cast<std::size_t>(s)] = best;
  }
  return v;
}

struct FitResult {
  ValueTable table;
  std::optional<Eigen::VectorXd> theta;  // linear classes only
};

FitResult fit_class(const FunctionClassHandle& handle, const RegressionProblem& prob) {
  FitResult out;
  if (const auto* finite = std::get_if<FiniteFunctionClass>(&handle)) {
    const std::int64_t member = weighted_least_squares_finite(*finite, prob);
    out.table = finite->member_table(member);
  } else {
    const auto& linear = std::get<LinearFunctionClass>(handle);
    RidgeFit fit = weighted_ridge_linear(linear, prob);
    out.table = linear.value_table(fit.theta);
    out.theta = std::move(fit.theta);
  }
  return out;
}

BonusFunction make_bonus(const FunctionClassHandle& handle, const FitResult& center,
                         const StageSlice& slice, const std::vector<double>& sigmas, double beta,
                         const PnlsviConfig& config) {
  DivergenceQuery query{slice.cells, sigmas, config.lambda};
  if (const auto* finite = std::get_if<FiniteFunctionClass>(&handle)) {
    const WeightedDataNorm norm = WeightedDataNorm::build(query, finite->cells());
    switch (config.bonus_mode) {
      case BonusMode::Auto:
      case BonusMode::Exhaustive:
        return bonus_exhaustive_all(*finite, center.table, norm, beta);
      case BonusMode::BinarySearch: {
        if (!config.allow_nonconvex_binary_search)
          throw std::invalid_argument(
              "make_bonus: binary search on a finite class is heuristic; enable it explicitly");
        FiniteCenteredOracle up(*finite, center.table, norm, +1.0);
        FiniteCenteredOracle down(*finite, center.table, norm, -1.0);
        BonusFunction bonus;
        bonus.provenance = BonusProvenance::BinarySearch;
        bonus.values.resize(static_cast<std::size_t>(finite->cells()));
        for (Cell z = 0; z < finite->cells(); ++z)
          bonus.values[static_cast<std::size_t>(z)] =
              bonus_binary_search(up, down, beta, config.binary_search_alpha, finite->range(), z)
                  .value;
        return bonus;
      }
      case BonusMode::LinearClosedForm:
        throw std::invalid_argument("make_bonus: closed form requires a linear class");
    }
  }
  const auto& linear = std::get<LinearFunctionClass>(handle);
  switch (config.bonus_mode) {
    case BonusMode::Auto:
    case BonusMode::LinearClosedForm: {
      const LinearGram gram(linear, query);
      return bonus_linear_all(linear, gram, beta);
    }
    case BonusMode::BinarySearch: {
      if (!center.theta) throw std::invalid_argument("make_bonus: missing linear center");
      LinearCenteredOracle up(linear, *center.theta, query, +1.0);
      LinearCenteredOracle down(linear, *center.theta, query, -1.0);
      BonusFunction bonus;
      bonus.provenance = BonusProvenance::BinarySearch;
      bonus.values.resize(static_cast<std::size_t>(linear.cells()));
      for (Cell z = 0; z < linear.cells(); ++z)
        bonus.values[static_cast<std::size_t>(z)] =
            bonus_binary_search(up, down, beta, config.binary_search_alpha, linear.range(), z).value;
      return bonus;
    }
    case BonusMode::Exhaustive:
      throw std::invalid_argument("make_bonus: exhaustive scan requires a finite class");
  }
  throw std::logic_error("make_bonus: unreachable");
}

ValueTable clipped_pessimistic(const ValueTable& fit, const BonusFunction& bonus, double epsilon,
                               double upper) {
  ValueTable out(fit.size());
  for (std::size_t z = 0; z < fit.size(); ++z) {
    const double x = fit[z] - bonus.values[z] - epsilon;
    out[z] = x < 0.0 ? 0.0 : (x > upper ? upper : x);
  }
  return out;
}

void check_classes(const std::vector<StageClasses>& classes, int horizon) {
  if (static_cast<int>(classes.size()) != horizon)
    throw std::invalid_argument("pnlsvi: one class per stage required");
  for (const StageClasses& sc : classes) {
    if (class_num_states(sc.value) != class_num_states(classes[0].value) ||
        class_num_actions(sc.value) != class_num_actions(classes[0].value))
      throw std::invalid_argument("pnlsvi: stage classes disagree on the state-action space");
  }
}

}  // namespace

int class_num_states(const FunctionClassHandle& handle) {
  return std::visit([](const auto& cls) { return cls.num_states(); }, handle);
}

int class_num_actions(const FunctionClassHandle& handle) {
  return std::visit([](const auto& cls) { return cls.num_actions(); }, handle);
}

double class_range(const FunctionClassHandle& handle) {
  return std::visit([](const auto& cls) { return cls.range(); }, handle);
}

double class_log_size(const FunctionClassHandle& handle, double net_eps) {
  if (const auto* finite = std::get_if<FiniteFunctionClass>(&handle))
    return std::log(static_cast<double>(finite->size()));
  return linear_epsilon_net_log_size(std::get<LinearFunctionClass>(handle), net_eps);
}

ConfidenceInputs make_confidence_inputs(const std::vector<StageClasses>& classes, int num_episodes,
                                        const PnlsviConfig& config) {
  if (classes.empty()) throw std::invalid_argument("make_confidence_inputs: no classes");
  ConfidenceInputs inputs;
  inputs.delta = config.delta;
  inputs.lambda = config.lambda;
  inputs.horizon = static_cast<int>(classes.size());
  inputs.num_episodes = num_episodes;
  inputs.kappa = config.kappa;
  inputs.c_var = config.c_var;
  inputs.overrides = config.overrides;

  double log_n = 0.0;
  for (const StageClasses& sc : classes) {
    log_n = std::max(log_n, class_log_size(sc.value, config.net_eps));
    log_n = std::max(log_n, class_log_size(sc.moment, config.net_eps));
    inputs.range.push_back(class_range(sc.value));
    inputs.epsilon_first.push_back(sc.epsilon_first);
    inputs.epsilon_second.push_back(sc.epsilon_second);
  }
  inputs.log_class_size = log_n;
  // Bonus class realized as outputs over member pairs: N_b = N(N-1)/2.
  inputs.log_bonus_class_size = std::max(std::log(2.0), 2.0 * log_n - std::log(2.0));
  return inputs;
}

VariancePhaseOutput variance_estimation_phase(const OfflineDataset& variance_half,
                                              const std::vector<StageClasses>& classes,
                                              const ConfidenceParams& params,
                                              const PnlsviConfig& config) {
  const int horizon = variance_half.horizon;
  check_classes(classes, horizon);
  const int num_states = class_num_states(classes[0].value);
  const int num_actions = class_num_actions(classes[0].value);
  const int n_cells = num_states * num_actions;
  const double h_real = static_cast<double>(horizon);

  VariancePhaseOutput out;
  out.first_moment.resize(static_cast<std::size_t>(horizon));
  out.second_moment.resize(static_cast<std::size_t>(horizon));
  out.crude_values.assign(static_cast<std::size_t>(horizon) + 1,
                          ValueTable(static_cast<std::size_t>(n_cells), 0.0));
  out.bonus.resize(static_cast<std::size_t>(horizon));
  out.sigma_hat.resize(static_cast<std::size_t>(horizon));

  const std::vector<double> unit_sigma(static_cast<std::size_t>(variance_half.num_episodes), 1.0);

  for (int h = horizon - 1; h >= 0; --h) {
    const std::size_t idx = static_cast<std::size_t>(h);
    const StageClasses& stage = classes[idx];
    const StageSlice slice = make_slice(variance_half, h, num_actions);
    const std::vector<double> next_value =
        state_values(out.crude_values[idx + 1], num_states, num_actions);

    RegressionProblem first;
    first.cells = slice.cells;
    first.sigmas = unit_sigma;
    first.num_cells = n_cells;
    first.lambda = std::holds_alternative<LinearFunctionClass>(stage.value) ? config.lambda : 0.0;
    first.targets.resize(slice.cells.size());
    for (std::size_t k = 0; k < slice.cells.size(); ++k)
      first.targets[k] =
          slice.rewards[k] + next_value[static_cast<std::size_t>(slice.next_states[k])];

    RegressionProblem second = first;
    second.lambda = std::holds_alternative<LinearFunctionClass>(stage.moment) ? config.lambda : 0.0;
    for (double& y : second.targets) y = y * y;

    FitResult f_bar = fit_class(stage.value, first);
    FitResult g_bar = fit_class(stage.moment, second);

    out.bonus[idx] =
        make_bonus(stage.value, f_bar, slice, unit_sigma, params.beta_bar1[idx], config);
    out.crude_values[idx] = clipped_pessimistic(f_bar.table, out.bonus[idx], stage.epsilon_first,
                                                class_range(stage.value));

    ValueTable sigma(static_cast<std::size_t>(n_cells));
    for (int z = 0; z < n_cells; ++z) {
      const double f = f_bar.table[static_cast<std::size_t>(z)];
      const double g = g_bar.table[static_cast<std::size_t>(z)];
      const double variance = std::max(1.0, g - f * f - params.variance_offset);
      sigma[static_cast<std::size_t>(z)] = std::min(h_real, std::sqrt(variance));
    }
    out.sigma_hat[idx] = std::move(sigma);
    out.first_moment[idx] = std::move(f_bar.table);
    out.second_moment[idx] = std::move(g_bar.table);
  }
  return out;
}

PnlsviOutput pessimistic_planning_phase(const OfflineDataset& planning_half,
                                        const std::vector<ValueTable>& sigma_hat,
                                        const std::vector<StageClasses>& classes,
                                        const ConfidenceParams& params, const PnlsviConfig& config,
                                        VariancePhaseOutput variance_output) {
  const int horizon = planning_half.horizon;
  check_classes(classes, horizon);
  if (static_cast<int>(sigma_hat.size()) != horizon)
    throw std::invalid_argument("pessimistic_planning_phase: sigma table count mismatch");
  const int num_states = class_num_states(classes[0].value);
  const int num_actions = class_num_actions(classes[0].value);
  const int n_cells = num_states * num_actions;

  PnlsviOutput out;
  out.variance = std::move(variance_output);
  out.params = params;
  out.weighted_fit.resize(static_cast<std::size_t>(horizon));
  out.bonus.resize(static_cast<std::size_t>(horizon));
  out.pessimistic.assign(static_cast<std::size_t>(horizon) + 1,
                         ValueTable(static_cast<std::size_t>(n_cells), 0.0));
  out.policy.probs.assign(static_cast<std::size_t>(horizon),
                          std::vector<double>(static_cast<std::size_t>(n_cells), 0.0));

  for (int h = horizon - 1; h >= 0; --h) {
    const std::size_t idx = static_cast<std::size_t>(h);
    const StageClasses& stage = classes[idx];
    const StageSlice slice = make_slice(planning_half, h, num_actions);
    const std::vector<double> next_value =
        state_values(out.pessimistic[idx + 1], num_states, num_actions);

    RegressionProblem prob;
    prob.cells = slice.cells;
    prob.num_cells = n_cells;
    prob.lambda = std::holds_alternative<LinearFunctionClass>(stage.value) ? config.lambda : 0.0;
    prob.targets.resize(slice.cells.size());
    prob.sigmas.resize(slice.cells.size());
    for (std::size_t k = 0; k < slice.cells.size(); ++k) {
      prob.targets[k] =
          slice.rewards[k] + next_value[static_cast<std::size_t>(slice.next_states[k])];
      prob.sigmas[k] = sigma_hat[idx][static_cast<std::size_t>(slice.cells[k])];
    }

    FitResult f_tilde = fit_class(stage.value, prob);
    out.bonus[idx] = make_bonus(stage.value, f_tilde, slice, prob.sigmas, params.beta[idx], config);
    out.pessimistic[idx] = clipped_pessimistic(f_tilde.table, out.bonus[idx], stage.epsilon_first,
                                               class_range(stage.value));
    out.weighted_fit[idx] = std::move(f_tilde.table);

    for (int s = 0; s < num_states; ++s) {
      int best = 0;
      double best_value = out.pessimistic[idx][static_cast<std::size_t>(s * num_actions)];
      for (int a = 1; a < num_actions; ++a) {
        const double v = out.pessimistic[idx][static_cast<std::size_t>(s * num_actions + a)];
        if (v > best_value) {
          best_value = v;
          best = a;
        }
      }
      out.policy.probs[idx][static_cast<std::size_t>(s * num_actions + best)] = 1.0;
    }
  }
  return out;
}

PnlsviOutput run_pnlsvi(const SplitDataset& split, const std::vector<StageClasses>& classes,
                        const PnlsviConfig& config) {
  if (split.planning.num_episodes != split.variance.num_episodes)
    throw std::invalid_argument("run_pnlsvi: halves must have equal size");
  if (split.planning.horizon != split.variance.horizon)
    throw std::invalid_argument("run_pnlsvi: halves disagree on horizon");

  const ConfidenceInputs inputs =
      make_confidence_inputs(classes, split.planning.num_episodes, config);
  const ConfidenceParams params = compute_confidence_params(inputs);

  VariancePhaseOutput variance = variance_estimation_phase(split.variance, classes, params, config);
  std::vector<ValueTable> sigma_hat = variance.sigma_hat;
  return pessimistic_planning_phase(split.planning, sigma_hat, classes, params, config,
                                    std::move(variance));
}

}  // namespace pnlsvi
