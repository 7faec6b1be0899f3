#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "pnlsvi/experiment.hpp"
#include "pnlsvi/offline_data.hpp"

using namespace pnlsvi;

TEST_CASE("rollout_dataset") {
  EpisodicMdp mdp = two_state_instance();
  Policy uniform = Policy::uniform(2, 2, 2);

  SUBCASE("zero episodes gives an empty dataset") {
    OfflineDataset data = rollout_dataset(mdp, uniform, 0, 1);
    CHECK(data.num_episodes == 0);
    CHECK(data.records.empty());
    CHECK_NOTHROW(data.validate(&mdp));
  }

  SUBCASE("deterministic environment and policy repeat one trajectory") {
    EpisodicMdp det;
    det.num_states = 2;
    det.num_actions = 2;
    det.horizon = 2;
    det.rewards = {{0.1, 0.2, 0.3, 0.4}, {0.5, 0.6, 0.7, 0.8}};
    det.transitions = {{0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0},
                       {0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0}};
    det.initial_distribution = {1.0, 0.0};
    Policy pi = Policy::deterministic(2, 2, 2, {{1, 0}, {0, 1}});
    OfflineDataset data = rollout_dataset(det, pi, 20, 3);
    for (int k = 1; k < 20; ++k)
      for (int h = 0; h < 2; ++h) {
        CHECK(data.at(k, h).state == data.at(0, h).state);
        CHECK(data.at(k, h).action == data.at(0, h).action);
        CHECK(data.at(k, h).next_state == data.at(0, h).next_state);
      }
  }

  SUBCASE("identical seeds reproduce the dataset bit-exactly") {
    OfflineDataset a = rollout_dataset(mdp, uniform, 50, 99);
    OfflineDataset b = rollout_dataset(mdp, uniform, 50, 99);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].state == b.records[i].state);
      CHECK(a.records[i].action == b.records[i].action);
      CHECK(a.records[i].reward == b.records[i].reward);
      CHECK(a.records[i].next_state == b.records[i].next_state);
    }
    OfflineDataset c = rollout_dataset(mdp, uniform, 50, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.records.size(); ++i)
      if (a.records[i].state != c.records[i].state ||
          a.records[i].action != c.records[i].action ||
          a.records[i].next_state != c.records[i].next_state)
        any_diff = true;
    CHECK(any_diff);
  }

  SUBCASE("episode chains are consistent and rewards deterministic") {
    OfflineDataset data = rollout_dataset(mdp, uniform, 100, 5);
    CHECK_NOTHROW(data.validate(&mdp));
  }

  SUBCASE("empirical transition frequencies stay inside a 99% Hoeffding band") {
    OfflineDataset data = rollout_dataset(mdp, uniform, 2000, 11);
    // counts[h][z][s']
    std::vector<std::vector<std::vector<int>>> counts(
        2, std::vector<std::vector<int>>(4, std::vector<int>(2, 0)));
    for (const TransitionRecord& rec : data.records)
      ++counts[static_cast<std::size_t>(rec.stage)]
              [static_cast<std::size_t>(rec.state * 2 + rec.action)]
              [static_cast<std::size_t>(rec.next_state)];
    for (int h = 0; h < 2; ++h)
      for (int z = 0; z < 4; ++z) {
        int n = 0;
        for (int sp = 0; sp < 2; ++sp)
          n += counts[static_cast<std::size_t>(h)][static_cast<std::size_t>(z)]
                     [static_cast<std::size_t>(sp)];
        if (n < 30) continue;
        const double band = std::sqrt(std::log(2.0 / 0.01) / (2.0 * n));
        auto row = mdp.transition_row(h, z / 2, z % 2);
        for (int sp = 0; sp < 2; ++sp) {
          const double freq = static_cast<double>(counts[static_cast<std::size_t>(h)]
                                                        [static_cast<std::size_t>(z)]
                                                        [static_cast<std::size_t>(sp)]) /
                              n;
          CHECK(std::abs(freq - row[static_cast<std::size_t>(sp)]) <= band);
        }
      }
  }

  SUBCASE("policy dimension mismatch throws") {
    Policy bad = Policy::uniform(3, 2, 2);
    CHECK_THROWS_AS(rollout_dataset(mdp, bad, 1, 1), std::invalid_argument);
  }
}

TEST_CASE("split_dataset") {
  EpisodicMdp mdp = two_state_instance();
  Policy uniform = Policy::uniform(2, 2, 2);

  SUBCASE("four episodes split as {0,1} / {2,3}") {
    OfflineDataset data = rollout_dataset(mdp, uniform, 4, 7);
    SplitDataset split = split_dataset(data);
    REQUIRE(split.planning.num_episodes == 2);
    REQUIRE(split.variance.num_episodes == 2);
    for (int k = 0; k < 2; ++k)
      for (int h = 0; h < 2; ++h) {
        CHECK(split.planning.at(k, h).state == data.at(k, h).state);
        CHECK(split.planning.at(k, h).action == data.at(k, h).action);
        CHECK(split.variance.at(k, h).state == data.at(k + 2, h).state);
        CHECK(split.variance.at(k, h).action == data.at(k + 2, h).action);
      }
  }

  SUBCASE("splitting is pure") {
    OfflineDataset data = rollout_dataset(mdp, uniform, 10, 13);
    SplitDataset a = split_dataset(data);
    SplitDataset b = split_dataset(data);
    CHECK(a.planning.records.size() == b.planning.records.size());
    for (std::size_t i = 0; i < a.planning.records.size(); ++i)
      CHECK(a.planning.records[i].state == b.planning.records[i].state);
  }

  SUBCASE("halves partition the input") {
    OfflineDataset data = rollout_dataset(mdp, uniform, 8, 17);
    SplitDataset split = split_dataset(data);
    // Collect (episode-local trace) signatures and compare as multisets.
    auto signature = [](const OfflineDataset& d, int k) {
      std::ostringstream os;
      for (int h = 0; h < d.horizon; ++h)
        os << d.at(k, h).state << ':' << d.at(k, h).action << ':' << d.at(k, h).next_state << ';';
      return os.str();
    };
    std::multiset<std::string> original, recombined;
    for (int k = 0; k < data.num_episodes; ++k) original.insert(signature(data, k));
    for (int k = 0; k < split.planning.num_episodes; ++k)
      recombined.insert(signature(split.planning, k));
    for (int k = 0; k < split.variance.num_episodes; ++k)
      recombined.insert(signature(split.variance, k));
    CHECK(original == recombined);
    CHECK_NOTHROW(split.planning.validate(&mdp));
    CHECK_NOTHROW(split.variance.validate(&mdp));
  }

  SUBCASE("odd episode count throws") {
    OfflineDataset data = rollout_dataset(mdp, uniform, 5, 3);
    CHECK_THROWS_AS(split_dataset(data), std::invalid_argument);
  }
}

TEST_CASE("csv export") {
  EpisodicMdp mdp = two_state_instance();
  OfflineDataset data = rollout_dataset(mdp, Policy::uniform(2, 2, 2), 3, 21);
  std::ostringstream os;
  write_csv(data, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "episode,stage,state,action,reward,next_state");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}
