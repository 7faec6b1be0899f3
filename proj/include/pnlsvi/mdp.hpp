#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pnlsvi {

/// Flat (state, action) index: z = s * num_actions + a.
using Cell = int;

/// Finite-horizon tabular MDP with stage-indexed deterministic rewards and
/// transitions. Stages are 0-based internally, h in [0, horizon).
///
/// Immutable after construction; all operations below are pure functions.
struct EpisodicMdp {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  /// rewards[h][s*A + a], each in [0, 1].
  std::vector<std::vector<double>> rewards;
  /// transitions[h][(s*A + a)*S + s'], each row a probability vector.
  std::vector<std::vector<double>> transitions;
  /// Probability vector over initial states.
  std::vector<double> initial_distribution;

  /// Optional diagnostic counter bumped on every transition-row access.
  /// Used to demonstrate that planning code never touches the dynamics.
  std::shared_ptr<std::atomic<std::uint64_t>> transition_probe;

  int cells() const { return num_states * num_actions; }

  double reward(int h, int s, int a) const {
    return rewards[static_cast<std::size_t>(h)][static_cast<std::size_t>(s * num_actions + a)];
  }

  std::span<const double> transition_row(int h, int s, int a) const {
    if (transition_probe) transition_probe->fetch_add(1, std::memory_order_relaxed);
    const auto& t = transitions[static_cast<std::size_t>(h)];
    return {t.data() + static_cast<std::ptrdiff_t>(s * num_actions + a) * num_states,
            static_cast<std::size_t>(num_states)};
  }

  /// Throws std::invalid_argument if any structural invariant fails
  /// (row sums within 1e-12 of 1, rewards in [0,1], initial mass 1).
  void validate() const;
};

/// State-value function attached to one stage. Stage `horizon` is the
/// terminal all-zero function produced by backward induction.
struct StageValueFunction {
  int stage = 0;
  std::vector<double> values;  // indexed by state
};

/// Action-value function attached to one stage, indexed by cell.
struct StageActionValueFunction {
  int stage = 0;
  std::vector<double> values;  // indexed by s*A + a
};

/// Per-stage stochastic policy; probs[h][s*A + a] with rows over actions
/// summing to 1. Deterministic policies are stored as point masses.
struct Policy {
  std::vector<std::vector<double>> probs;

  int num_stages() const { return static_cast<int>(probs.size()); }
  double prob(int h, int s, int a, int num_actions) const {
    return probs[static_cast<std::size_t>(h)][static_cast<std::size_t>(s * num_actions + a)];
  }

  static Policy deterministic(int horizon, int num_states, int num_actions,
                              const std::vector<std::vector<int>>& actions);
  static Policy uniform(int horizon, int num_states, int num_actions);
  /// weight_first * a + (1 - weight_first) * b, stage by stage.
  static Policy mixture(const Policy& a, const Policy& b, double weight_first);

  void validate(int num_states, int num_actions) const;
};

/// Per-stage state-action visitation probabilities of a policy.
struct OccupancyMeasure {
  std::vector<std::vector<double>> d;  // d[h][s*A + a], sums to 1 per stage
};

struct OptimalSolution {
  std::vector<StageActionValueFunction> q;  // Q*_h
  std::vector<StageValueFunction> v;        // V*_h, h in [0, horizon]
  Policy pi;                                // greedy, lowest action index on ties
};

struct PolicyEvaluationResult {
  std::vector<StageActionValueFunction> q;
  std::vector<StageValueFunction> v;  // h in [0, horizon]
};

/// [T_h V](s,a) = r_h(s,a) + sum_{s'} P_h(s'|s,a) V(s').
/// `next_values` must carry stage h+1.
StageActionValueFunction bellman_apply(const EpisodicMdp& mdp, int h,
                                       const StageValueFunction& next_values);

/// Second-moment operator: [T2_h V](s,a) = E_{s'}[(r_h(s,a) + V(s'))^2].
StageActionValueFunction bellman_second_moment(const EpisodicMdp& mdp, int h,
                                               const StageValueFunction& next_values);

/// [Var_h V](s,a) = [P_h V^2] - ([P_h V])^2, clamped to 0 from tiny negative
/// rounding; values below -1e-12 raise std::logic_error.
StageActionValueFunction conditional_variance(const EpisodicMdp& mdp, int h,
                                              const StageValueFunction& next_values);

/// max{1, [Var_h V]}, the truncated conditional variance.
StageActionValueFunction truncated_variance(const EpisodicMdp& mdp, int h,
                                            const StageValueFunction& next_values);

/// Backward induction with V_{H+1} = 0; greedy ties broken by lowest action.
OptimalSolution optimal_values(const EpisodicMdp& mdp);

/// Exact policy evaluation by backward induction.
PolicyEvaluationResult policy_value(const EpisodicMdp& mdp, const Policy& pi);

/// Forward induction; each stage's table sums to 1.
OccupancyMeasure occupancy_measure(const EpisodicMdp& mdp, const Policy& pi);

}  // namespace pnlsvi
