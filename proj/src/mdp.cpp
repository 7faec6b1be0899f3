#include "pnlsvi/mdp.hpp"

#include <cmath>
#include <stdexcept>

namespace pnlsvi {

namespace {

constexpr double kMassTol = 1e-12;

void check_distribution(const double* p, int n, const char* what) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (p[i] < -kMassTol) throw std::invalid_argument(std::string(what) + ": negative mass");
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > kMassTol)
    throw std::invalid_argument(std::string(what) + ": mass does not sum to 1");
}

void check_stage(const EpisodicMdp& mdp, int h) {
  if (h < 0 || h >= mdp.horizon) throw std::invalid_argument("stage out of range");
}

void check_next_values(const EpisodicMdp& mdp, int h, const StageValueFunction& v) {
  check_stage(mdp, h);
  if (v.stage != h + 1) throw std::invalid_argument("value function stage mismatch");
  if (static_cast<int>(v.values.size()) != mdp.num_states)
    throw std::invalid_argument("value function dimension mismatch");
}

}  // namespace

void EpisodicMdp::validate() const {
  if (num_states <= 0 || num_actions <= 0 || horizon <= 0)
    throw std::invalid_argument("EpisodicMdp: dimensions must be positive");
  if (static_cast<int>(rewards.size()) != horizon ||
      static_cast<int>(transitions.size()) != horizon)
    throw std::invalid_argument("EpisodicMdp: per-stage table count mismatch");
  const std::size_t n_cells = static_cast<std::size_t>(cells());
  for (int h = 0; h < horizon; ++h) {
    const auto& r = rewards[static_cast<std::size_t>(h)];
    const auto& t = transitions[static_cast<std::size_t>(h)];
    if (r.size() != n_cells) throw std::invalid_argument("EpisodicMdp: reward table size");
    if (t.size() != n_cells * static_cast<std::size_t>(num_states))
      throw std::invalid_argument("EpisodicMdp: transition table size");
    for (double x : r)
      if (x < 0.0 || x > 1.0) throw std::invalid_argument("EpisodicMdp: reward outside [0,1]");
    for (std::size_t z = 0; z < n_cells; ++z)
      check_distribution(t.data() + z * num_states, num_states, "EpisodicMdp transition row");
  }
  if (static_cast<int>(initial_distribution.size()) != num_states)
    throw std::invalid_argument("EpisodicMdp: initial distribution size");
  check_distribution(initial_distribution.data(), num_states, "EpisodicMdp initial distribution");
}

Policy Policy::deterministic(int horizon, int num_states, int num_actions,
                             const std::vector<std::vector<int>>& actions) {
  if (static_cast<int>(actions.size()) != horizon)
    throw std::invalid_argument("Policy::deterministic: stage count mismatch");
  Policy pi;
  pi.probs.assign(static_cast<std::size_t>(horizon),
                  std::vector<double>(static_cast<std::size_t>(num_states * num_actions), 0.0));
  for (int h = 0; h < horizon; ++h) {
    if (static_cast<int>(actions[static_cast<std::size_t>(h)].size()) != num_states)
      throw std::invalid_argument("Policy::deterministic: state count mismatch");
    for (int s = 0; s < num_states; ++s) {
      int a = actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
      if (a < 0 || a >= num_actions)
        throw std::invalid_argument("Policy::deterministic: action out of range");
      pi.probs[static_cast<std::size_t>(h)][static_cast<std::size_t>(s * num_actions + a)] = 1.0;
    }
  }
  return pi;
}

Policy Policy::uniform(int horizon, int num_states, int num_actions) {
  Policy pi;
  pi.probs.assign(static_cast<std::size_t>(horizon),
                  std::vector<double>(static_cast<std::size_t>(num_states * num_actions),
                                      1.0 / num_actions));
  return pi;
}

Policy Policy::mixture(const Policy& a, const Policy& b, double weight_first) {
  if (a.probs.size() != b.probs.size())
    throw std::invalid_argument("Policy::mixture: stage count mismatch");
  Policy out;
  out.probs.resize(a.probs.size());
  for (std::size_t h = 0; h < a.probs.size(); ++h) {
    if (a.probs[h].size() != b.probs[h].size())
      throw std::invalid_argument("Policy::mixture: table size mismatch");
    out.probs[h].resize(a.probs[h].size());
    for (std::size_t i = 0; i < a.probs[h].size(); ++i)
      out.probs[h][i] = weight_first * a.probs[h][i] + (1.0 - weight_first) * b.probs[h][i];
  }
  return out;
}

void Policy::validate(int num_states, int num_actions) const {
  for (const auto& table : probs) {
    if (table.size() != static_cast<std::size_t>(num_states * num_actions))
      throw std::invalid_argument("Policy: table size mismatch");
    for (int s = 0; s < num_states; ++s)
      check_distribution(table.data() + static_cast<std::ptrdiff_t>(s) * num_actions, num_actions,
                         "Policy row");
  }
}

StageActionValueFunction bellman_apply(const EpisodicMdp& mdp, int h,
                                       const StageValueFunction& next_values) {
  check_next_values(mdp, h, next_values);
  StageActionValueFunction out;
  out.stage = h;
  out.values.resize(static_cast<std::size_t>(mdp.cells()));
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      auto row = mdp.transition_row(h, s, a);
      double acc = 0.0;
      for (int sp = 0; sp < mdp.num_states; ++sp)
        acc += row[static_cast<std::size_t>(sp)] * next_values.values[static_cast<std::size_t>(sp)];
      out.values[static_cast<std::size_t>(s * mdp.num_actions + a)] = mdp.reward(h, s, a) + acc;
    }
  }
  return out;
}

StageActionValueFunction bellman_second_moment(const EpisodicMdp& mdp, int h,
                                               const StageValueFunction& next_values) {
  check_next_values(mdp, h, next_values);
  StageActionValueFunction out;
  out.stage = h;
  out.values.resize(static_cast<std::size_t>(mdp.cells()));
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      auto row = mdp.transition_row(h, s, a);
      const double r = mdp.reward(h, s, a);
      double acc = 0.0;
      for (int sp = 0; sp < mdp.num_states; ++sp) {
        const double y = r + next_values.values[static_cast<std::size_t>(sp)];
        acc += row[static_cast<std::size_t>(sp)] * y * y;
      }
      out.values[static_cast<std::size_t>(s * mdp.num_actions + a)] = acc;
    }
  }
  return out;
}

StageActionValueFunction conditional_variance(const EpisodicMdp& mdp, int h,
                                              const StageValueFunction& next_values) {
  StageActionValueFunction first = bellman_apply(mdp, h, next_values);
  StageActionValueFunction second = bellman_second_moment(mdp, h, next_values);
  StageActionValueFunction out;
  out.stage = h;
  out.values.resize(first.values.size());
  for (std::size_t z = 0; z < first.values.size(); ++z) {
    double var = second.values[z] - first.values[z] * first.values[z];
    if (var < -1e-12) throw std::logic_error("conditional_variance: negative variance");
    out.values[z] = var < 0.0 ? 0.0 : var;
  }
  return out;
}

StageActionValueFunction truncated_variance(const EpisodicMdp& mdp, int h,
                                            const StageValueFunction& next_values) {
  StageActionValueFunction out = conditional_variance(mdp, h, next_values);
  for (double& x : out.values) x = x < 1.0 ? 1.0 : x;
  return out;
}

OptimalSolution optimal_values(const EpisodicMdp& mdp) {
  mdp.validate();
  OptimalSolution sol;
  sol.q.resize(static_cast<std::size_t>(mdp.horizon));
  sol.v.resize(static_cast<std::size_t>(mdp.horizon) + 1);
  sol.pi.probs.assign(static_cast<std::size_t>(mdp.horizon),
                      std::vector<double>(static_cast<std::size_t>(mdp.cells()), 0.0));

  sol.v[static_cast<std::size_t>(mdp.horizon)] =
      StageValueFunction{mdp.horizon, std::vector<double>(static_cast<std::size_t>(mdp.num_states), 0.0)};

  for (int h = mdp.horizon - 1; h >= 0; --h) {
    StageActionValueFunction q = bellman_apply(mdp, h, sol.v[static_cast<std::size_t>(h) + 1]);
    StageValueFunction v;
    v.stage = h;
    v.values.resize(static_cast<std::size_t>(mdp.num_states));
    for (int s = 0; s < mdp.num_states; ++s) {
      int best = 0;
      double best_q = q.values[static_cast<std::size_t>(s * mdp.num_actions)];
      for (int a = 1; a < mdp.num_actions; ++a) {
        double qa = q.values[static_cast<std::size_t>(s * mdp.num_actions + a)];
        if (qa > best_q) {
          best_q = qa;
          best = a;
        }
      }
      v.values[static_cast<std::size_t>(s)] = best_q;
      sol.pi.probs[static_cast<std::size_t>(h)][static_cast<std::size_t>(s * mdp.num_actions + best)] = 1.0;
    }
    sol.q[static_cast<std::size_t>(h)] = std::move(q);
    sol.v[static_cast<std::size_t>(h)] = std::move(v);
  }
  return sol;
}

PolicyEvaluationResult policy_value(const EpisodicMdp& mdp, const Policy& pi) {
  if (pi.num_stages() != mdp.horizon) throw std::invalid_argument("policy_value: stage count mismatch");
  pi.validate(mdp.num_states, mdp.num_actions);
  PolicyEvaluationResult res;
  res.q.resize(static_cast<std::size_t>(mdp.horizon));
  res.v.resize(static_cast<std::size_t>(mdp.horizon) + 1);
  res.v[static_cast<std::size_t>(mdp.horizon)] =
      StageValueFunction{mdp.horizon, std::vector<double>(static_cast<std::size_t>(mdp.num_states), 0.0)};

  for (int h = mdp.horizon - 1; h >= 0; --h) {
    StageActionValueFunction q = bellman_apply(mdp, h, res.v[static_cast<std::size_t>(h) + 1]);
    StageValueFunction v;
    v.stage = h;
    v.values.assign(static_cast<std::size_t>(mdp.num_states), 0.0);
    for (int s = 0; s < mdp.num_states; ++s) {
      double acc = 0.0;
      for (int a = 0; a < mdp.num_actions; ++a)
        acc += pi.prob(h, s, a, mdp.num_actions) *
               q.values[static_cast<std::size_t>(s * mdp.num_actions + a)];
      v.values[static_cast<std::size_t>(s)] = acc;
    }
    res.q[static_cast<std::size_t>(h)] = std::move(q);
    res.v[static_cast<std::size_t>(h)] = std::move(v);
  }
  return res;
}

OccupancyMeasure occupancy_measure(const EpisodicMdp& mdp, const Policy& pi) {
  if (pi.num_stages() != mdp.horizon)
    throw std::invalid_argument("occupancy_measure: stage count mismatch");
  pi.validate(mdp.num_states, mdp.num_actions);
  OccupancyMeasure occ;
  occ.d.assign(static_cast<std::size_t>(mdp.horizon),
               std::vector<double>(static_cast<std::size_t>(mdp.cells()), 0.0));

  std::vector<double> state_dist = mdp.initial_distribution;
  for (int h = 0; h < mdp.horizon; ++h) {
    auto& table = occ.d[static_cast<std::size_t>(h)];
    for (int s = 0; s < mdp.num_states; ++s)
      for (int a = 0; a < mdp.num_actions; ++a)
        table[static_cast<std::size_t>(s * mdp.num_actions + a)] =
            state_dist[static_cast<std::size_t>(s)] * pi.prob(h, s, a, mdp.num_actions);
    if (h + 1 < mdp.horizon) {
      std::vector<double> next(static_cast<std::size_t>(mdp.num_states), 0.0);
      for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
          const double mass = table[static_cast<std::size_t>(s * mdp.num_actions + a)];
          if (mass == 0.0) continue;
          auto row = mdp.transition_row(h, s, a);
          for (int sp = 0; sp < mdp.num_states; ++sp)
            next[static_cast<std::size_t>(sp)] += mass * row[static_cast<std::size_t>(sp)];
        }
      state_dist = std::move(next);
    }
  }
  return occ;
}

}  // namespace pnlsvi
