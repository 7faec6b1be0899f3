#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pnlsvi/mdp.hpp"

namespace pnlsvi {

/// One (s, a, r, s') observation inside an episode.
struct TransitionRecord {
  int episode = 0;
  int stage = 0;  // 0-based
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};

/// Episodes rolled out by one behavior policy. Records are stored
/// episode-major, stage-minor; every episode has exactly `horizon` records
/// and within an episode next_state at stage h equals state at stage h+1.
struct OfflineDataset {
  int num_episodes = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::string behavior_policy_id;
  std::vector<TransitionRecord> records;

  const TransitionRecord& at(int episode, int stage) const {
    return records[static_cast<std::size_t>(episode) * horizon + stage];
  }

  /// Structural invariants; with an MDP also checks reward determinism.
  void validate(const EpisodicMdp* mdp = nullptr) const;
};

/// Equal disjoint halves of a dataset. `planning` feeds the weighted
/// value-iteration pass, `variance` feeds the variance-estimation pass.
struct SplitDataset {
  OfflineDataset planning;  // episodes 0..K-1 of the input
  OfflineDataset variance;  // episodes K..2K-1 of the input
};

/// Samples `num_episodes` independent episodes under `mu`. The RNG stream
/// order per episode is: initial state, then per stage (action, transition).
/// Identical arguments reproduce the dataset bit-exactly.
OfflineDataset rollout_dataset(const EpisodicMdp& mdp, const Policy& mu, int num_episodes,
                               std::uint64_t seed, const std::string& policy_id = "");

/// Even-count datasets only; preserves within-half episode order.
SplitDataset split_dataset(const OfflineDataset& data);

/// Columns: episode,stage,state,action,reward,next_state (0-based indices).
void write_csv(const OfflineDataset& data, std::ostream& os);

}  // namespace pnlsvi
