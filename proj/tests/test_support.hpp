// Shared oracles for the test suites. Everything here is deliberately coded
// independently of the library's implementation paths: policy enumeration
// with a recursive evaluator, a local episode sampler, and a hand-rolled
// Gaussian elimination for linear solves.
#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pnlsvi/mdp.hpp"

namespace testsupport {

// Expected return of a deterministic policy, by direct recursion on the
// definition (no tables shared with the library's backward induction).
inline double recursive_policy_value(const pnlsvi::EpisodicMdp& mdp,
                                     const std::vector<std::vector<int>>& actions, int h, int s) {
  if (h == mdp.horizon) return 0.0;
  const int a = actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
  double value = mdp.reward(h, s, a);
  auto row = mdp.transition_row(h, s, a);
  for (int sp = 0; sp < mdp.num_states; ++sp)
    if (row[static_cast<std::size_t>(sp)] > 0.0)
      value += row[static_cast<std::size_t>(sp)] * recursive_policy_value(mdp, actions, h + 1, sp);
  return value;
}

struct BruteForceOptimal {
  std::vector<double> v1;                 // per-state optimal initial values
  std::vector<std::vector<int>> actions;  // an optimal deterministic policy
};

// Exhaustive maximization over all A^(S*H) deterministic policies.
inline BruteForceOptimal brute_force_optimal(const pnlsvi::EpisodicMdp& mdp) {
  const int slots = mdp.horizon * mdp.num_states;
  std::int64_t total = 1;
  for (int i = 0; i < slots; ++i) total *= mdp.num_actions;

  BruteForceOptimal best;
  best.v1.assign(static_cast<std::size_t>(mdp.num_states),
                 -std::numeric_limits<double>::infinity());
  double best_init = -std::numeric_limits<double>::infinity();
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
      const double v = recursive_policy_value(mdp, actions, 0, s);
      if (v > best.v1[static_cast<std::size_t>(s)]) best.v1[static_cast<std::size_t>(s)] = v;
      init_value += mdp.initial_distribution[static_cast<std::size_t>(s)] * v;
    }
    if (init_value > best_init) {
      best_init = init_value;
      best.actions = actions;
    }
  }
  return best;
}

// Monte-Carlo episode sampler with its own RNG and categorical draw.
class EpisodeSampler {
 public:
  explicit EpisodeSampler(std::uint64_t seed) : gen_(seed) {}

  int draw(const double* probs, int n) {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
      cum += probs[i];
      if (u < cum) return i;
    }
    return n - 1;
  }

  // One episode return under a stochastic policy.
  double episode_return(const pnlsvi::EpisodicMdp& mdp, const pnlsvi::Policy& pi) {
    int s = draw(mdp.initial_distribution.data(), mdp.num_states);
    double total = 0.0;
    for (int h = 0; h < mdp.horizon; ++h) {
      const auto& table = pi.probs[static_cast<std::size_t>(h)];
      const int a = draw(table.data() + static_cast<std::ptrdiff_t>(s) * mdp.num_actions,
                         mdp.num_actions);
      total += mdp.reward(h, s, a);
      auto row = mdp.transition_row(h, s, a);
      s = draw(row.data(), mdp.num_states);
    }
    return total;
  }

 private:
  std::mt19937_64 gen_;
};

// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> gaussian_solve(std::vector<std::vector<double>> a,
                                          std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    if (std::abs(a[col][col]) < 1e-14) throw std::runtime_error("gaussian_solve: singular");
    for (int row = col + 1; row < n; ++row) {
      const double factor = a[row][col] / a[col][col];
      for (int k = col; k < n; ++k) a[row][k] -= factor * a[col][k];
      b[row] -= factor * b[col];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int row = n - 1; row >= 0; --row) {
    double acc = b[static_cast<std::size_t>(row)];
    for (int k = row + 1; k < n; ++k) acc -= a[row][k] * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(row)] = acc / a[row][row];
  }
  return x;
}

}  // namespace testsupport
