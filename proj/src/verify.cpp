#include <cmath>
#include <random>
#include <sstream>

#include "pnlsvi/bonus.hpp"
#include "pnlsvi/divergence.hpp"
#include "pnlsvi/experiment.hpp"
#include "pnlsvi/regression.hpp"
#include "pnlsvi/rng.hpp"

namespace pnlsvi {

namespace {

// Independent oracle: enumerate every deterministic policy and evaluate it
// recursively. Deliberately avoids the library's DP code path.
struct BruteForceResult {
  std::vector<double> v1;  // best initial-stage state values
  double init_value = 0.0;
};

double brute_eval_from(const EpisodicMdp& mdp, const std::vector<std::vector<int>>& actions, int h,
                       int s) {
  if (h == mdp.horizon) return 0.0;
  const int a = actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
  double value = mdp.reward(h, s, a);
  auto row = mdp.transition_row(h, s, a);
  for (int sp = 0; sp < mdp.num_states; ++sp)
    if (row[static_cast<std::size_t>(sp)] > 0.0)
      value += row[static_cast<std::size_t>(sp)] * brute_eval_from(mdp, actions, h + 1, sp);
  return value;
}

BruteForceResult brute_force_optimal(const EpisodicMdp& mdp) {
  const int slots = mdp.horizon * mdp.num_states;
  std::int64_t total = 1;
  for (int i = 0; i < slots; ++i) total *= mdp.num_actions;

  BruteForceResult best;
  best.v1.assign(static_cast<std::size_t>(mdp.num_states),
                 -std::numeric_limits<double>::infinity());
  best.init_value = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> actions(
      static_cast<std::size_t>(mdp.horizon),
      std::vector<int>(static_cast<std::size_t>(mdp.num_states), 0));
  for (std::int64_t code = 0; code < total; ++code) {
    std::int64_t rest = code;
    for (int h = 0; h < mdp.horizon; ++h)
      for (int s = 0; s < mdp.num_states; ++s) {
        actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] =
            static_cast<int>(rest % mdp.num_actions);
        rest /= mdp.num_actions;
      }
    double init_value = 0.0;
    for (int s = 0; s < mdp.num_states; ++s) {
      const double v = brute_eval_from(mdp, actions, 0, s);
      best.v1[static_cast<std::size_t>(s)] = std::max(best.v1[static_cast<std::size_t>(s)], v);
      init_value += mdp.initial_distribution[static_cast<std::size_t>(s)] * v;
    }
    best.init_value = std::max(best.init_value, init_value);
  }
  return best;
}

CheckResult check_optimal_values() {
  CheckResult check{"optimal-values-vs-brute-force", true, ""};
  const int sizes[5][3] = {{2, 2, 2}, {3, 2, 3}, {2, 3, 2}, {4, 2, 2}, {3, 3, 2}};
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    EpisodicMdp mdp = random_mdp(sizes[i][0], sizes[i][1], sizes[i][2], 1000 + i);
    OptimalSolution sol = optimal_values(mdp);
    BruteForceResult brute = brute_force_optimal(mdp);
    for (int s = 0; s < mdp.num_states; ++s)
      worst = std::max(worst, std::abs(sol.v[0].values[static_cast<std::size_t>(s)] -
                                       brute.v1[static_cast<std::size_t>(s)]));
  }
  check.passed = worst <= 1e-9;
  std::ostringstream os;
  os << "max |V*_1 - brute| = " << worst;
  check.detail = os.str();
  return check;
}

FiniteFunctionClass random_dense_class(std::mt19937_64& gen, int cells, int members, double range) {
  std::vector<std::vector<double>> tensor(static_cast<std::size_t>(members),
                                          std::vector<double>(static_cast<std::size_t>(cells)));
  for (auto& member : tensor)
    for (double& x : member) x = uniform_range(gen, 0.0, range);
  return FiniteFunctionClass::from_tensor(2, cells / 2, range, std::move(tensor));
}

RegressionProblem random_problem(std::mt19937_64& gen, int cells, int count, double lambda) {
  RegressionProblem prob;
  prob.num_cells = cells;
  prob.lambda = lambda;
  for (int k = 0; k < count; ++k) {
    prob.cells.push_back(uniform_int(gen, cells));
    prob.targets.push_back(uniform_range(gen, -1.0, 3.0));
    prob.sigmas.push_back(uniform_range(gen, 1.0, 3.0));
  }
  return prob;
}

CheckResult check_regression() {
  CheckResult check{"regression-oracle-certificates", true, ""};
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 10 && check.passed; ++trial) {
    FiniteFunctionClass cls = random_dense_class(gen, 4, 40, 2.0);
    RegressionProblem prob = random_problem(gen, 4, 30, 0.0);
    const std::int64_t argmin = weighted_least_squares_finite(cls, prob);
    const double best = weighted_objective(cls, argmin, prob);
    for (std::int64_t m = 0; m < cls.size(); ++m)
      if (weighted_objective(cls, m, prob) < best - 1e-12) check.passed = false;
    RegressionProblem scaled = prob;
    for (double& s : scaled.sigmas) s *= 2.5;
    if (weighted_least_squares_finite(cls, scaled) != argmin) check.passed = false;
    if (!check.passed) check.detail = "finite-class certificate failed";
  }
  for (int trial = 0; trial < 10 && check.passed; ++trial) {
    Eigen::MatrixXd features(6, 3);
    for (int i = 0; i < 6; ++i) {
      Eigen::Vector3d row(uniform_range(gen, -1.0, 1.0), uniform_range(gen, -1.0, 1.0),
                          uniform_range(gen, -1.0, 1.0));
      features.row(i) = row / std::max(1.0, row.norm());
    }
    LinearFunctionClass cls(3, 2, features, 50.0, 10.0);
    for (double lambda : {0.0, 1.0}) {
      RegressionProblem prob = random_problem(gen, 6, 50, lambda);
      RidgeFit fit = weighted_ridge_linear(cls, prob);
      if (fit.normal_equation_residual > 1e-8) {
        check.passed = false;
        check.detail = "linear normal-equation residual too large";
      }
    }
  }
  return check;
}

CheckResult check_divergence_monotonicity() {
  CheckResult check{"divergence-monotonicity", true, ""};
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 20 && check.passed; ++trial) {
    FiniteFunctionClass cls = random_dense_class(gen, 4, 12, 2.0);
    DivergenceQuery q;
    q.lambda = 1.0;
    for (int k = 0; k < 12; ++k) {
      q.data_cells.push_back(uniform_int(gen, 4));
      q.sigmas.push_back(uniform_range(gen, 1.0, 2.0));
    }
    const Cell z = uniform_int(gen, 4);
    const double base = d2_finite(cls, q, z);

    DivergenceQuery more = q;
    more.data_cells.push_back(uniform_int(gen, 4));
    more.sigmas.push_back(uniform_range(gen, 1.0, 2.0));
    if (d2_finite(cls, more, z) > base + 1e-12) check.passed = false;

    DivergenceQuery larger_lambda = q;
    larger_lambda.lambda = 2.0;
    if (base > 0.0 && d2_finite(cls, larger_lambda, z) >= base) check.passed = false;

    DivergenceQuery heavier = q;
    for (double& s : heavier.sigmas) s += 0.5;
    if (d2_finite(cls, heavier, z) < base - 1e-12) check.passed = false;
  }
  if (!check.passed) check.detail = "a monotonicity property failed";
  return check;
}

CheckResult check_binary_search() {
  CheckResult check{"binary-search-precision", true, ""};
  std::mt19937_64 gen(4242);
  const double alpha = 1e-3;
  double worst = 0.0;
  for (int trial = 0; trial < 5 && check.passed; ++trial) {
    Eigen::MatrixXd features(2, 1);
    features(0, 0) = uniform_range(gen, 0.5, 1.0);
    features(1, 0) = uniform_range(gen, 0.2, 0.9);
    LinearFunctionClass cls(1, 2, features, 0.5, 1.0);
    DivergenceQuery q;
    q.lambda = 1.0;
    for (int k = 0; k < 20; ++k) {
      q.data_cells.push_back(uniform_int(gen, 2));
      q.sigmas.push_back(uniform_range(gen, 1.0, 2.0));
    }
    const double beta = uniform_range(gen, 0.5, 2.0);
    const Cell z = uniform_int(gen, 2);

    LinearCenteredOracle oracle(cls, Eigen::VectorXd::Zero(1), q, +1.0);
    BinarySearchResult bs = bonus_binary_search_one_sided(oracle, beta, alpha, cls.range(), z);

    FiniteFunctionClass net = linear_epsilon_net(cls, 1e-5, /*clamp_values=*/false);
    std::vector<double> center(2, 0.0);
    const double exhaustive =
        bonus_exhaustive(net, center, WeightedDataNorm::build(q, 2), beta, z, 2'000'000);
    worst = std::max(worst, std::abs(bs.value - exhaustive));
    const int call_bound =
        static_cast<int>(std::ceil(std::log2(bs.w_high_initial / bs.w_tolerance))) + 2;
    if (std::abs(bs.value - exhaustive) > alpha || bs.oracle_calls > call_bound)
      check.passed = false;
  }
  std::ostringstream os;
  os << "max |binary-search - exhaustive| = " << worst;
  check.detail = os.str();
  return check;
}

struct FrequencyChecks {
  CheckResult pessimism{"pessimism-frequency", true, ""};
  CheckResult sandwich{"sandwich-frequency", true, ""};
  CheckResult decomposition{"regret-decomposition", true, ""};
};

FrequencyChecks check_frequencies(const ExperimentConfig& config) {
  FrequencyChecks out;
  ExperimentConfig local = config;
  local.k_values = {2000};
  local.seeds.clear();
  for (std::uint64_t s = 1; s <= 30; ++s) local.seeds.push_back(s);
  const Scenario scenario = build_scenario(local);

  int pessimism_clean = 0, sandwich_clean = 0, decomposition_violations = 0, premise_runs = 0;
  for (std::uint64_t seed : local.seeds) {
    RunRecord record = run_cell(scenario, local, 2000, seed);
    if (record.pessimism_violations == 0) ++pessimism_clean;
    if (record.sandwich_violations == 0) ++sandwich_clean;
    if (record.premise_holds) {
      ++premise_runs;
      if (record.gap > record.decomposition_rhs + 1e-9) ++decomposition_violations;
    }
  }
  out.pessimism.passed = pessimism_clean >= 27;
  out.pessimism.detail = std::to_string(pessimism_clean) + "/30 runs with zero violations";
  out.sandwich.passed = sandwich_clean >= 27;
  out.sandwich.detail = std::to_string(sandwich_clean) + "/30 runs with zero violations";
  out.decomposition.passed = decomposition_violations == 0;
  out.decomposition.detail = std::to_string(decomposition_violations) + " violations over " +
                             std::to_string(premise_runs) + " premise-holding runs";
  return out;
}

CheckResult check_determinism(const ExperimentConfig& config) {
  CheckResult check{"sweep-determinism", true, ""};
  ExperimentConfig local = config;
  local.k_values = {200};
  local.seeds = {1, 2};
  const std::uint64_t first = sweep(local).determinism_hash;
  const std::uint64_t second = sweep(local).determinism_hash;
  check.passed = first == second;
  std::ostringstream os;
  os << std::hex << first << " vs " << second;
  check.detail = os.str();
  return check;
}

}  // namespace

VerifyReport verify(const ExperimentConfig& config) {
  VerifyReport report;
  auto guarded = [&report](CheckResult (*fn)()) {
    try {
      report.checks.push_back(fn());
    } catch (const std::exception& e) {
      report.checks.push_back(CheckResult{"exception", false, e.what()});
    }
  };
  guarded(&check_optimal_values);
  guarded(&check_regression);
  guarded(&check_divergence_monotonicity);
  guarded(&check_binary_search);
  try {
    FrequencyChecks freq = check_frequencies(config);
    report.checks.push_back(freq.pessimism);
    report.checks.push_back(freq.sandwich);
    report.checks.push_back(freq.decomposition);
    report.checks.push_back(check_determinism(config));
  } catch (const std::exception& e) {
    report.checks.push_back(CheckResult{"exception", false, e.what()});
  }
  return report;
}

}  // namespace pnlsvi
