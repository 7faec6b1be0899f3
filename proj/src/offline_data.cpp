#include "pnlsvi/offline_data.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>

#include "pnlsvi/rng.hpp"

namespace pnlsvi {

namespace {

int sample_categorical(std::mt19937_64& gen, std::span<const double> probs) {
  const double u = uniform_double(gen);
  double cum = 0.0;
  int last_positive = -1;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    const double p = probs[static_cast<std::size_t>(i)];
    if (p > 0.0) last_positive = i;
    cum += p;
    if (u < cum) return i;
  }
  // Rounding can leave cum slightly below 1; fall back to the last support point.
  if (last_positive < 0) throw std::invalid_argument("sample_categorical: zero distribution");
  return last_positive;
}

}  // namespace

void OfflineDataset::validate(const EpisodicMdp* mdp) const {
  if (records.size() != static_cast<std::size_t>(num_episodes) * static_cast<std::size_t>(horizon))
    throw std::invalid_argument("OfflineDataset: record count mismatch");
  for (int k = 0; k < num_episodes; ++k) {
    for (int h = 0; h < horizon; ++h) {
      const TransitionRecord& rec = at(k, h);
      if (rec.episode != k || rec.stage != h)
        throw std::invalid_argument("OfflineDataset: record index mismatch");
      if (h + 1 < horizon && rec.next_state != at(k, h + 1).state)
        throw std::invalid_argument("OfflineDataset: episode chain broken");
      if (mdp != nullptr) {
        if (rec.state < 0 || rec.state >= mdp->num_states || rec.action < 0 ||
            rec.action >= mdp->num_actions || rec.next_state < 0 ||
            rec.next_state >= mdp->num_states)
          throw std::invalid_argument("OfflineDataset: record out of range");
        if (rec.reward != mdp->reward(h, rec.state, rec.action))
          throw std::invalid_argument("OfflineDataset: reward not deterministic");
      }
    }
  }
}

OfflineDataset rollout_dataset(const EpisodicMdp& mdp, const Policy& mu, int num_episodes,
                               std::uint64_t seed, const std::string& policy_id) {
  if (num_episodes < 0) throw std::invalid_argument("rollout_dataset: negative episode count");
  if (mu.num_stages() != mdp.horizon)
    throw std::invalid_argument("rollout_dataset: policy stage count mismatch");
  mu.validate(mdp.num_states, mdp.num_actions);

  OfflineDataset data;
  data.num_episodes = num_episodes;
  data.horizon = mdp.horizon;
  data.seed = seed;
  data.behavior_policy_id = policy_id;
  data.records.reserve(static_cast<std::size_t>(num_episodes) * static_cast<std::size_t>(mdp.horizon));

  std::mt19937_64 gen(seed);
  for (int k = 0; k < num_episodes; ++k) {
    int s = sample_categorical(gen, {mdp.initial_distribution.data(),
                                     static_cast<std::size_t>(mdp.num_states)});
    for (int h = 0; h < mdp.horizon; ++h) {
      const auto& table = mu.probs[static_cast<std::size_t>(h)];
      int a = sample_categorical(
          gen, {table.data() + static_cast<std::ptrdiff_t>(s) * mdp.num_actions,
                static_cast<std::size_t>(mdp.num_actions)});
      int sp = sample_categorical(gen, mdp.transition_row(h, s, a));
      data.records.push_back(TransitionRecord{k, h, s, a, mdp.reward(h, s, a), sp});
      s = sp;
    }
  }
  return data;
}

SplitDataset split_dataset(const OfflineDataset& data) {
  if (data.num_episodes % 2 != 0)
    throw std::invalid_argument("split_dataset: episode count must be even");
  const int half = data.num_episodes / 2;

  auto take = [&](int first_episode, int count) {
    OfflineDataset out;
    out.num_episodes = count;
    out.horizon = data.horizon;
    out.seed = data.seed;
    out.behavior_policy_id = data.behavior_policy_id;
    out.records.reserve(static_cast<std::size_t>(count) * static_cast<std::size_t>(data.horizon));
    for (int k = 0; k < count; ++k)
      for (int h = 0; h < data.horizon; ++h) {
        TransitionRecord rec = data.at(first_episode + k, h);
        rec.episode = k;
        out.records.push_back(rec);
      }
    return out;
  };

  SplitDataset split;
  split.planning = take(0, half);
  split.variance = take(half, half);
  return split;
}

void write_csv(const OfflineDataset& data, std::ostream& os) {
  os << "episode,stage,state,action,reward,next_state\n";
  char buf[64];
  for (const TransitionRecord& rec : data.records) {
    std::snprintf(buf, sizeof(buf), "%.17g", rec.reward);
    os << rec.episode << ',' << rec.stage << ',' << rec.state << ',' << rec.action << ',' << buf
       << ',' << rec.next_state << '\n';
  }
}

}  // namespace pnlsvi
