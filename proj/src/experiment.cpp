#include "pnlsvi/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pnlsvi/divergence.hpp"
#include "pnlsvi/rng.hpp"

namespace pnlsvi {

namespace {

// Pinned generator seed for the default 3-state scenario; chosen so the
// practical-profile suboptimality decays through the whole K sweep.
constexpr std::uint64_t kDefaultScenarioSeed = 643;

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double scenario_log_n(const Scenario& scenario) {
  double log_n = 0.0;
  for (const StageClasses& sc : scenario.classes)
    log_n = std::max(log_n, class_log_size(sc.value, scenario.net_eps));
  return log_n;
}

}  // namespace

RadiusOverrides ExperimentConfig::overrides() const {
  if (profile == "paper") return RadiusOverrides::paper();
  if (profile == "practical") return RadiusOverrides::practical(practical_multiplier);
  throw std::invalid_argument("ExperimentConfig: profile must be 'paper' or 'practical'");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: seed list empty");
  for (int k : k_values)
    if (k <= 0) throw std::invalid_argument("ExperimentConfig: K values must be positive");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("ExperimentConfig: bad delta");
  if (lambda <= 0.0) throw std::invalid_argument("ExperimentConfig: lambda must be positive");
  (void)overrides();
}

EpisodicMdp random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  EpisodicMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.horizon = horizon;
  const int n_cells = num_states * num_actions;
  mdp.rewards.assign(static_cast<std::size_t>(horizon),
                     std::vector<double>(static_cast<std::size_t>(n_cells), 0.0));
  mdp.transitions.assign(
      static_cast<std::size_t>(horizon),
      std::vector<double>(static_cast<std::size_t>(n_cells) * num_states, 0.0));
  for (int h = 0; h < horizon; ++h) {
    for (int z = 0; z < n_cells; ++z) {
      mdp.rewards[static_cast<std::size_t>(h)][static_cast<std::size_t>(z)] =
          uniform_double(gen);
      // Rejection-sample a row whose normalized entries all stay in [0.1, 0.9].
      std::vector<double> row(static_cast<std::size_t>(num_states));
      for (int attempt = 0; attempt < 1000; ++attempt) {
        double sum = 0.0;
        for (double& p : row) {
          p = uniform_range(gen, 0.1, 0.9);
          sum += p;
        }
        bool ok = true;
        for (double& p : row) {
          p /= sum;
          if (p < 0.1 || p > 0.9) ok = false;
        }
        if (ok) break;
      }
      std::copy(row.begin(), row.end(),
                mdp.transitions[static_cast<std::size_t>(h)].begin() +
                    static_cast<std::ptrdiff_t>(z) * num_states);
    }
  }
  mdp.initial_distribution.assign(static_cast<std::size_t>(num_states), 1.0 / num_states);
  mdp.validate();
  return mdp;
}

EpisodicMdp two_state_instance() {
  EpisodicMdp mdp;
  mdp.num_states = 2;
  mdp.num_actions = 2;
  mdp.horizon = 2;
  mdp.rewards = {{0.05, 0.65, 0.20, 0.30}, {0.90, 0.10, 0.00, 0.80}};
  mdp.transitions = {{0.75, 0.25, 0.25, 0.75, 0.60, 0.40, 0.30, 0.70},
                     {0.50, 0.50, 0.20, 0.80, 0.80, 0.20, 0.40, 0.60}};
  mdp.initial_distribution = {0.6, 0.4};
  mdp.validate();
  return mdp;
}

std::vector<StageClasses> build_stage_classes(const EpisodicMdp& mdp, const ClassSpec& spec) {
  const int horizon = mdp.horizon;
  std::vector<StageClasses> classes;
  classes.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    const double range = static_cast<double>(horizon - h);
    StageClasses sc{FunctionClassHandle{LinearFunctionClass::tabular_complete(1, 1, 1.0)},
                    FunctionClassHandle{LinearFunctionClass::tabular_complete(1, 1, 1.0)}, 0.0,
                    0.0};
    switch (spec.kind) {
      case ClassSpec::Kind::TabularComplete:
        sc.value = LinearFunctionClass::tabular_complete(mdp.num_states, mdp.num_actions, range);
        sc.moment =
            LinearFunctionClass::tabular_complete(mdp.num_states, mdp.num_actions, range * range);
        sc.epsilon_first = 0.0;
        sc.epsilon_second = 0.0;
        break;
      case ClassSpec::Kind::Grid:
        sc.value = FiniteFunctionClass::product_grid(mdp.num_states, mdp.num_actions, spec.levels,
                                                     range);
        sc.moment = FiniteFunctionClass::product_grid(mdp.num_states, mdp.num_actions, spec.levels,
                                                      range * range);
        // Mid-grid targets attain half the spacing.
        sc.epsilon_first = range / (2.0 * (spec.levels - 1));
        sc.epsilon_second = range * range / (2.0 * (spec.levels - 1));
        break;
      case ClassSpec::Kind::Dense: {
        if (static_cast<int>(spec.dense_members.size()) != horizon)
          throw std::invalid_argument("ClassSpec: dense member tensor per stage required");
        auto value_cls = FiniteFunctionClass::from_tensor(
            mdp.num_states, mdp.num_actions, range, spec.dense_members[static_cast<std::size_t>(h)]);
        // Misspecification measured on probe Bellman images: the terminal
        // zero function, the optimal continuation, and seeded random values.
        OptimalSolution opt = optimal_values(mdp);
        std::mt19937_64 gen(0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(h));
        double eps1 = 0.0, eps2 = 0.0;
        std::vector<StageValueFunction> probes;
        probes.push_back(StageValueFunction{
            h + 1, std::vector<double>(static_cast<std::size_t>(mdp.num_states), 0.0)});
        probes.push_back(StageValueFunction{h + 1, opt.v[static_cast<std::size_t>(h) + 1].values});
        for (int probe = 0; probe < 3; ++probe) {
          StageValueFunction v{h + 1,
                               std::vector<double>(static_cast<std::size_t>(mdp.num_states), 0.0)};
          for (double& x : v.values) x = uniform_range(gen, 0.0, std::max(0.0, range - 1.0));
          probes.push_back(std::move(v));
        }
        for (const StageValueFunction& v : probes) {
          CompletenessReport report = completeness_gap(value_cls, mdp, h, v);
          eps1 = std::max(eps1, report.first_moment_gap);
          eps2 = std::max(eps2, report.second_moment_gap);
        }
        sc.moment = value_cls;  // dense spec supplies a single family per stage
        sc.value = std::move(value_cls);
        sc.epsilon_first = eps1;
        sc.epsilon_second = eps2;
        break;
      }
    }
    classes.push_back(std::move(sc));
  }
  return classes;
}

Scenario build_scenario(const ExperimentConfig& config) {
  Scenario scenario;
  scenario.name = config.scenario;
  scenario.net_eps = config.cls.net_eps;

  ClassSpec class_spec = config.cls;
  if (config.scenario == "default") {
    scenario.mdp = random_mdp(3, 2, 3, kDefaultScenarioSeed);
  } else if (config.scenario == "default-grid") {
    scenario.mdp = random_mdp(3, 2, 3, kDefaultScenarioSeed);
    class_spec.kind = ClassSpec::Kind::Grid;
  } else if (config.scenario == "two-state") {
    scenario.mdp = two_state_instance();
  } else if (config.scenario == "random") {
    scenario.mdp = random_mdp(3, 2, 3, config.mdp_seed);
  } else if (config.scenario == "custom") {
    if (!config.custom_mdp) throw std::invalid_argument("scenario 'custom' needs an MDP document");
    scenario.mdp = *config.custom_mdp;
    scenario.mdp.validate();
  } else {
    throw std::invalid_argument("unknown scenario: " + config.scenario);
  }

  scenario.optimal = optimal_values(scenario.mdp);
  scenario.optimal_occupancy = occupancy_measure(scenario.mdp, scenario.optimal.pi);

  switch (config.behavior.kind) {
    case BehaviorSpec::Kind::Uniform:
      scenario.behavior =
          Policy::uniform(scenario.mdp.horizon, scenario.mdp.num_states, scenario.mdp.num_actions);
      scenario.behavior_id = "uniform";
      break;
    case BehaviorSpec::Kind::EpsilonGreedyOptimal: {
      scenario.behavior = Policy::mixture(
          scenario.optimal.pi,
          Policy::uniform(scenario.mdp.horizon, scenario.mdp.num_states, scenario.mdp.num_actions),
          1.0 - config.behavior.epsilon);
      char buf[48];
      std::snprintf(buf, sizeof(buf), "eps_greedy_optimal(%g)", config.behavior.epsilon);
      scenario.behavior_id = buf;
      break;
    }
  }
  scenario.behavior_occupancy = occupancy_measure(scenario.mdp, scenario.behavior);

  scenario.classes = build_stage_classes(scenario.mdp, class_spec);
  double kappa = kKappaSingleton;
  for (int h = 0; h < scenario.mdp.horizon; ++h) {
    const StageClasses& sc = scenario.classes[static_cast<std::size_t>(h)];
    double stage_kappa;
    if (const auto* finite = std::get_if<FiniteFunctionClass>(&sc.value))
      stage_kappa = coverage_constant(*finite, scenario.behavior_occupancy, h);
    else
      stage_kappa =
          coverage_constant(std::get<LinearFunctionClass>(sc.value), scenario.behavior_occupancy, h);
    kappa = std::min(kappa, stage_kappa);
    scenario.epsilon_first_max = std::max(scenario.epsilon_first_max, sc.epsilon_first);
  }
  scenario.kappa = kappa;

  scenario.truncated_var.reserve(static_cast<std::size_t>(scenario.mdp.horizon));
  for (int h = 0; h < scenario.mdp.horizon; ++h)
    scenario.truncated_var.push_back(
        truncated_variance(scenario.mdp, h, scenario.optimal.v[static_cast<std::size_t>(h) + 1]));
  return scenario;
}

PnlsviConfig pnlsvi_config_for(const Scenario& scenario, const ExperimentConfig& config) {
  PnlsviConfig pncfg;
  pncfg.delta = config.delta;
  pncfg.lambda = config.lambda;
  pncfg.c_var = config.c_var;
  pncfg.kappa = scenario.kappa;
  pncfg.overrides = config.overrides();
  pncfg.net_eps = scenario.net_eps;
  return pncfg;
}

double suboptimality_gap(const EpisodicMdp& mdp, const Policy& pi_hat) {
  OptimalSolution opt = optimal_values(mdp);
  PolicyEvaluationResult eval = policy_value(mdp, pi_hat);
  double gap = 0.0;
  for (int s = 0; s < mdp.num_states; ++s)
    gap += mdp.initial_distribution[static_cast<std::size_t>(s)] *
           (opt.v[0].values[static_cast<std::size_t>(s)] -
            eval.v[0].values[static_cast<std::size_t>(s)]);
  if (gap < -1e-9) throw std::logic_error("suboptimality_gap: policy beats the optimum");
  return gap;
}

double instance_bound_rhs(const Scenario& scenario, const OfflineDataset& planning_half,
                         double multiplier, double lambda) {
  const EpisodicMdp& mdp = scenario.mdp;
  const int n_cells = mdp.cells();
  double total = 0.0;
  for (int h = 0; h < mdp.horizon; ++h) {
    const std::size_t idx = static_cast<std::size_t>(h);
    DivergenceQuery query;
    query.lambda = lambda;
    query.data_cells.reserve(static_cast<std::size_t>(planning_half.num_episodes));
    query.sigmas.reserve(static_cast<std::size_t>(planning_half.num_episodes));
    for (int k = 0; k < planning_half.num_episodes; ++k) {
      const TransitionRecord& rec = planning_half.at(k, h);
      const Cell z = rec.state * mdp.num_actions + rec.action;
      query.data_cells.push_back(z);
      query.sigmas.push_back(
          std::sqrt(scenario.truncated_var[idx].values[static_cast<std::size_t>(z)]));
    }

    const StageClasses& sc = scenario.classes[idx];
    std::vector<double> d2(static_cast<std::size_t>(n_cells), 0.0);
    if (const auto* finite = std::get_if<FiniteFunctionClass>(&sc.value)) {
      if (finite->size() * (finite->size() - 1) / 2 > kDefaultPairBudget)
        return std::numeric_limits<double>::quiet_NaN();
      d2 = d2_finite_all(*finite, WeightedDataNorm::build(query, n_cells));
    } else {
      const auto& linear = std::get<LinearFunctionClass>(sc.value);
      const LinearGram gram(linear, query);
      for (Cell z = 0; z < n_cells; ++z)
        d2[static_cast<std::size_t>(z)] = d2_linear(linear, gram, z);
    }
    for (Cell z = 0; z < n_cells; ++z)
      total += scenario.optimal_occupancy.d[idx][static_cast<std::size_t>(z)] *
               std::sqrt(d2[static_cast<std::size_t>(z)]);
  }
  return multiplier * std::sqrt(scenario_log_n(scenario)) * total;
}

RunRecord run_cell(const Scenario& scenario, const ExperimentConfig& config, int num_episodes,
                   std::uint64_t seed, PnlsviOutput* output_out) {
  const auto start = std::chrono::steady_clock::now();
  const EpisodicMdp& mdp = scenario.mdp;
  OfflineDataset dataset =
      rollout_dataset(mdp, scenario.behavior, 2 * num_episodes, seed, scenario.behavior_id);
  SplitDataset split = split_dataset(dataset);
  PnlsviOutput output = run_pnlsvi(split, scenario.classes, pnlsvi_config_for(scenario, config));

  RunRecord record;
  record.scenario = scenario.name;
  record.num_episodes = num_episodes;
  record.seed = seed;
  record.epsilon = scenario.epsilon_first_max;
  record.kappa = scenario.kappa;
  record.gap = suboptimality_gap(mdp, output.policy);
  record.bound_rhs = instance_bound_rhs(scenario, split.planning, 1.0, config.lambda);

  const int n_cells = mdp.cells();
  record.premise_holds = true;
  double bonus_expectation = 0.0;
  for (int h = 0; h < mdp.horizon; ++h) {
    const std::size_t idx = static_cast<std::size_t>(h);
    // Pessimism against the exact optimum.
    for (Cell z = 0; z < n_cells; ++z) {
      if (output.pessimistic[idx][static_cast<std::size_t>(z)] >
          scenario.optimal.q[idx].values[static_cast<std::size_t>(z)] + 1e-9)
        ++record.pessimism_violations;
      const double sigma = output.variance.sigma_hat[idx][static_cast<std::size_t>(z)];
      if (sigma * sigma > scenario.truncated_var[idx].values[static_cast<std::size_t>(z)] + 1e-9 ||
          sigma * sigma < 1.0 - 1e-9)
        ++record.sandwich_violations;
    }
    // Decomposition premise |[T_h f_hat_{h+1}](z) - f_tilde_h(z)| <= b_h(z).
    StageValueFunction next{h + 1, std::vector<double>(static_cast<std::size_t>(mdp.num_states))};
    for (int s = 0; s < mdp.num_states; ++s) {
      double best = output.pessimistic[idx + 1][static_cast<std::size_t>(s * mdp.num_actions)];
      for (int a = 1; a < mdp.num_actions; ++a)
        best = std::max(best,
                        output.pessimistic[idx + 1][static_cast<std::size_t>(s * mdp.num_actions + a)]);
      next.values[static_cast<std::size_t>(s)] = best;
    }
    StageActionValueFunction bellman_image = bellman_apply(mdp, h, next);
    for (Cell z = 0; z < n_cells; ++z) {
      const double err = std::abs(bellman_image.values[static_cast<std::size_t>(z)] -
                                  output.weighted_fit[idx][static_cast<std::size_t>(z)]);
      if (err > output.bonus[idx].values[static_cast<std::size_t>(z)]) record.premise_holds = false;
      bonus_expectation += scenario.optimal_occupancy.d[idx][static_cast<std::size_t>(z)] *
                           output.bonus[idx].values[static_cast<std::size_t>(z)];
    }
  }
  record.decomposition_rhs =
      2.0 * bonus_expectation + 2.0 * scenario.epsilon_first_max * mdp.horizon;

  const auto stop = std::chrono::steady_clock::now();
  record.ms = std::chrono::duration<double, std::milli>(stop - start).count();
  if (output_out != nullptr) *output_out = std::move(output);
  return record;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RateFit fit_log_log(const std::vector<double>& k_values, const std::vector<double>& gaps) {
  if (k_values.size() != gaps.size() || k_values.size() < 2)
    throw std::invalid_argument("fit_log_log: need at least two points");
  const std::size_t n = k_values.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(k_values[i]);
    const double y = std::log(std::max(gaps[i], 1e-12));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  RateFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

std::string run_record_csv_header() {
  return "scenario,K,seed,gap,bound_rhs,pess_viol,sandwich_viol,eps,kappa,ms";
}

namespace {

std::string csv_row_without_ms(const RunRecord& r) {
  std::ostringstream os;
  os << r.scenario << ',' << r.num_episodes << ',' << r.seed << ',' << format_double(r.gap) << ','
     << format_double(r.bound_rhs) << ',' << r.pessimism_violations << ','
     << r.sandwich_violations << ',' << format_double(r.epsilon) << ','
     << format_double(r.kappa);
  return os.str();
}

}  // namespace

std::string run_record_csv_row(const RunRecord& r) {
  char ms_buf[32];
  std::snprintf(ms_buf, sizeof(ms_buf), "%.3f", r.ms);
  return csv_row_without_ms(r) + "," + ms_buf;
}

std::uint64_t determinism_hash(const std::vector<RunRecord>& rows) {
  std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&hash](const std::string& s) {
    for (unsigned char c : s) {
      hash ^= c;
      hash *= 1099511628211ULL;
    }
    hash ^= static_cast<unsigned char>('\n');
    hash *= 1099511628211ULL;
  };
  for (const RunRecord& r : rows) mix(csv_row_without_ms(r));
  return hash;
}

SweepResult sweep(const ExperimentConfig& config) {
  config.validate();
  const Scenario scenario = build_scenario(config);

  struct Cell_ {
    int k;
    std::uint64_t seed;
  };
  std::vector<Cell_> cells;
  for (int k : config.k_values)
    for (std::uint64_t seed : config.seeds) cells.push_back({k, seed});

  SweepResult result;
  result.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  const unsigned num_threads =
      config.threads > 0 ? static_cast<unsigned>(config.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        result.rows[i] = run_cell(scenario, config, cells[i].k, cells[i].seed);
      } catch (const std::exception& e) {
        // Per-cell failures are recorded, not fatal.
        RunRecord& record = result.rows[i];
        record.scenario = scenario.name;
        record.num_episodes = cells[i].k;
        record.seed = cells[i].seed;
        record.gap = std::numeric_limits<double>::quiet_NaN();
        record.bound_rhs = std::numeric_limits<double>::quiet_NaN();
        record.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < num_threads && t < cells.size(); ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::sort(result.rows.begin(), result.rows.end(), [](const RunRecord& a, const RunRecord& b) {
    return a.num_episodes != b.num_episodes ? a.num_episodes < b.num_episodes : a.seed < b.seed;
  });

  std::map<int, std::vector<double>> gaps_by_k;
  for (const RunRecord& r : result.rows)
    if (r.error.empty()) gaps_by_k[r.num_episodes].push_back(r.gap);
  std::vector<double> ks, medians;
  for (auto& [k, gaps] : gaps_by_k) {
    const double med = median(gaps);
    result.median_gap_by_k[k] = med;
    ks.push_back(static_cast<double>(k));
    medians.push_back(med);
  }
  if (ks.size() >= 2) result.rate = fit_log_log(ks, medians);

  // Fit the bound multiplier on the smallest K, then measure coverage beyond it.
  const int k_min = result.rows.front().num_episodes;
  double fitted_c = 0.0;
  for (const RunRecord& r : result.rows)
    if (r.error.empty() && r.num_episodes == k_min && std::isfinite(r.bound_rhs) &&
        r.bound_rhs > 0.0)
      fitted_c = std::max(fitted_c, r.gap / r.bound_rhs);
  result.fitted_c = fitted_c;
  std::size_t covered = 0, beyond = 0;
  for (const RunRecord& r : result.rows) {
    if (r.num_episodes == k_min || !std::isfinite(r.bound_rhs)) continue;
    ++beyond;
    if (r.gap <= fitted_c * r.bound_rhs + 1e-12) ++covered;
  }
  result.bound_coverage = beyond == 0 ? 1.0 : static_cast<double>(covered) / beyond;
  result.determinism_hash = determinism_hash(result.rows);
  return result;
}

bool VerifyReport::all_passed() const {
  for (const CheckResult& check : checks)
    if (!check.passed) return false;
  return true;
}

}  // namespace pnlsvi
