#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pnlsvi/mdp.hpp"
#include "pnlsvi/offline_data.hpp"
#include "pnlsvi/pnlsvi.hpp"

namespace pnlsvi {

struct BehaviorSpec {
  enum class Kind { Uniform, EpsilonGreedyOptimal };
  Kind kind = Kind::EpsilonGreedyOptimal;
  /// Probability of acting uniformly instead of optimally.
  double epsilon = 0.3;
};

struct ClassSpec {
  enum class Kind { TabularComplete, Grid, Dense };
  Kind kind = Kind::TabularComplete;
  int levels = 9;        // Grid only
  double net_eps = 0.05;  // net resolution for linear log-sizes
  /// Dense only: explicit member value tensors, one per stage.
  std::vector<std::vector<std::vector<double>>> dense_members;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string scenario = "default";
  std::uint64_t mdp_seed = 0;  // scenario "random" only
  std::optional<EpisodicMdp> custom_mdp;
  std::vector<int> k_values = {500};
  std::vector<std::uint64_t> seeds = {1};
  double delta = 0.1;
  double lambda = 1.0;
  double c_var = 1.0;
  std::string profile = "paper";  // "paper" | "practical"
  double practical_multiplier = 0.1;
  BehaviorSpec behavior;
  ClassSpec cls;
  std::string out_csv;
  std::string out_json;
  int threads = 0;  // 0 = hardware concurrency

  RadiusOverrides overrides() const;
  void validate() const;
};

/// A fully resolved experiment environment: the MDP, its exact solution and
/// occupancies, the behavior policy, the per-stage hypothesis classes, and
/// the measured coverage constant.
struct Scenario {
  std::string name;
  EpisodicMdp mdp;
  Policy behavior;
  std::string behavior_id;
  std::vector<StageClasses> classes;
  double kappa = 0.0;
  double epsilon_first_max = 0.0;
  double net_eps = 0.05;
  OptimalSolution optimal;
  OccupancyMeasure optimal_occupancy;
  OccupancyMeasure behavior_occupancy;
  /// max{1, Var_h V*_{h+1}} per stage: the weight function of the
  /// instance-dependent suboptimality bound.
  std::vector<StageActionValueFunction> truncated_var;
};

/// Random tabular MDP: transition rows with all entries in [0.1, 0.9],
/// uniform initial distribution, rewards uniform in [0, 1].
EpisodicMdp random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed);

/// Pinned 2-state, 2-action, H=2 instance used across unit tests.
EpisodicMdp two_state_instance();

/// Named scenarios: "default" (pinned 3s/2a/H3 MDP, tabular-complete class),
/// "default-grid" (same MDP, levels-9 grid class), "two-state", "random".
Scenario build_scenario(const ExperimentConfig& config);

/// Builds the per-stage classes an MDP shape calls for under a class spec.
std::vector<StageClasses> build_stage_classes(const EpisodicMdp& mdp, const ClassSpec& spec);

PnlsviConfig pnlsvi_config_for(const Scenario& scenario, const ExperimentConfig& config);

struct RunRecord {
  std::string scenario;
  int num_episodes = 0;  // K (per half)
  std::uint64_t seed = 0;
  double gap = 0.0;
  double bound_rhs = 0.0;  // c = 1
  int pessimism_violations = 0;
  int sandwich_violations = 0;
  double epsilon = 0.0;
  double kappa = 0.0;
  double ms = 0.0;
  bool premise_holds = false;       // |T f_hat - f_tilde| <= b everywhere
  double decomposition_rhs = 0.0;   // 2 sum_h E_pi*[b_h] + 2 eps H
  std::string error;                // nonempty when the cell failed
};

/// Exact E_{s1}[V*_1(s1) - V^pi_1(s1)]; never below -1e-9.
double suboptimality_gap(const EpisodicMdp& mdp, const Policy& pi_hat);

/// c * sqrt(log N) * sum_h sum_z d^{pi*}_h(z) * D_h(z) with the divergence
/// weighted by the true truncated variance; NaN when the class is finite and
/// beyond the pair budget.
double instance_bound_rhs(const Scenario& scenario, const OfflineDataset& planning_half,
                         double multiplier, double lambda);

/// Rolls out 2K episodes, runs the algorithm, and evaluates everything
/// against the exact oracles.
RunRecord run_cell(const Scenario& scenario, const ExperimentConfig& config, int num_episodes,
                   std::uint64_t seed, PnlsviOutput* output_out = nullptr);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log(gap) against log(K).
RateFit fit_log_log(const std::vector<double>& k_values, const std::vector<double>& gaps);

struct SweepResult {
  std::vector<RunRecord> rows;  // sorted by (K, seed)
  std::map<int, double> median_gap_by_k;
  RateFit rate;
  double fitted_c = 0.0;        // max gap/bound ratio at the smallest K
  double bound_coverage = 0.0;  // fraction of rows with gap <= fitted_c * bound
  std::uint64_t determinism_hash = 0;
};

/// Runs every (K, seed) cell (parallel, order-deterministic output).
SweepResult sweep(const ExperimentConfig& config);

std::string run_record_csv_header();
std::string run_record_csv_row(const RunRecord& record);
/// FNV-1a over all rows with the wall-time column excluded.
std::uint64_t determinism_hash(const std::vector<RunRecord>& rows);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

/// Fast invariant suite: oracle equivalences, certificates, monotonicities,
/// binary-search precision, pessimism/sandwich frequencies, decomposition,
/// determinism.
VerifyReport verify(const ExperimentConfig& config);

double median(std::vector<double> values);

}  // namespace pnlsvi
