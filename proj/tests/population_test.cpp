// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "crowdledger/error.hpp"
#include "crowdledger/population.hpp"

namespace crowdledger::population {
namespace {

using BT = BehaviorType;

const std::map<BT, double> kStandard{{BT::Normal, 70},     {BT::Troll, 5},       {BT::Random, 5},
                                     {BT::Traitor, 5},     {BT::OrchSlander, 5}, {BT::Target, 10}};

// Largest remainder in exact integer arithmetic for integral percentages.
std::map<BT, std::size_t> apportion_oracle(const std::map<BT, int>& pct, std::size_t n) {
  std::map<BT, std::size_t> out;
  std::vector<std::pair<std::size_t, BT>> remainders;
  std::size_t assigned = 0;
  for (auto [type, p] : pct) {
    out[type] = p * n / 100;
    assigned += out[type];
    remainders.emplace_back(p * n % 100, type);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[remainders[k].second];
  return out;
}

TEST(Apportion, StandardMix) {
  const auto counts = apportion(kStandard, 100);
  EXPECT_EQ(counts.at(BT::Normal), 70u);
  EXPECT_EQ(counts.at(BT::Troll), 5u);
  EXPECT_EQ(counts.at(BT::Random), 5u);
  EXPECT_EQ(counts.at(BT::Traitor), 5u);
  EXPECT_EQ(counts.at(BT::OrchSlander), 5u);
  EXPECT_EQ(counts.at(BT::Target), 10u);
}

TEST(Apportion, MatchesIntegerOracle) {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    std::map<BT, int> pct;
    int left = 100;
    for (std::size_t i = 0; i + 1 < kAllBehaviors.size(); ++i) {
      const int p = static_cast<int>(rng.index(static_cast<std::uint64_t>(left) + 1));
      pct[kAllBehaviors[i]] = p;
      left -= p;
    }
    pct[kAllBehaviors.back()] = left;
    const std::size_t n = 1 + rng.index(300);

    std::map<BT, double> as_double;
    for (auto [t, p] : pct) as_double[t] = p;
    const auto got = apportion(as_double, n);
    const auto want = apportion_oracle(pct, n);
    EXPECT_EQ(got, want) << "n=" << n;
    std::size_t total = 0;
    for (auto [t, c] : got) total += c;
    EXPECT_EQ(total, n);
  }
}

TEST(BuildPopulation, StandardMixAndCoalition) {
  PopulationConfig cfg;
  cfg.percentages = kStandard;
  cfg.seed = 4;
  const auto agents = build_population(cfg, 100);
  ASSERT_EQ(agents.size(), 100u);

  std::map<BT, std::size_t> counts;
  std::set<UserId> target_ids;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    EXPECT_EQ(agents[i].id, i);
    ++counts[agents[i].behavior];
    if (agents[i].behavior == BT::Target) target_ids.insert(agents[i].id);
  }
  EXPECT_EQ(counts[BT::Normal], 70u);
  EXPECT_EQ(counts[BT::Target], 10u);
  for (const auto& a : agents) {
    EXPECT_EQ(!a.targets.empty(), is_orchestrated(a.behavior));
    if (is_orchestrated(a.behavior)) {
      EXPECT_EQ(a.group_id, 0);
      EXPECT_EQ(a.targets, target_ids);
    } else {
      EXPECT_FALSE(a.group_id.has_value());
    }
  }
}

TEST(BuildPopulation, EvenSplitBetweenCoalitions) {
  PopulationConfig cfg;
  cfg.percentages = {{BT::Normal, 80}, {BT::OrchSlander, 5}, {BT::OrchWhitewash, 5}, {BT::Target, 10}};
  const auto agents = build_population(cfg, 100);
  std::set<UserId> slandered, whitewashed;
  for (const auto& a : agents) {
    if (a.behavior == BT::OrchSlander) slandered = a.targets;
    if (a.behavior == BT::OrchWhitewash) whitewashed = a.targets;
  }
  EXPECT_EQ(slandered.size(), 5u);
  EXPECT_EQ(whitewashed.size(), 5u);
  for (auto id : slandered) EXPECT_FALSE(whitewashed.contains(id));
}

TEST(BuildPopulation, EdgeCasesAndErrors) {
  PopulationConfig cfg;
  const auto one = build_population(cfg, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].behavior, BT::Normal);

  cfg.percentages = {{BT::Normal, 90}, {BT::Troll, 5}};
  EXPECT_THROW(build_population(cfg, 10), Error);
  cfg.percentages = {{BT::Normal, 105}, {BT::Troll, -5}};
  try {
    validate(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadPercentages);
  }
}

TEST(BuildPopulation, Deterministic) {
  PopulationConfig cfg;
  cfg.percentages = kStandard;
  cfg.seed = 99;
  const auto a = build_population(cfg, 100);
  const auto b = build_population(cfg, 100);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].behavior, b[i].behavior);
  cfg.seed = 100;
  const auto c = build_population(cfg, 100);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].behavior != c[i].behavior;
  EXPECT_TRUE(differs);
}

AgentProfile agent(BT behavior, double accuracy = 1.0) {
  AgentProfile a;
  a.id = 1;
  a.behavior = behavior;
  a.accuracy = accuracy;
  if (is_orchestrated(behavior)) a.targets = {7};
  return a;
}

TEST(DecideVote, Examples) {
  Rng rng(1);
  const auto troll = decide_vote(agent(BT::Troll), {0, 1}, 0, 100, rng);
  EXPECT_EQ(troll.vote, -1);
  EXPECT_TRUE(troll.malicious);

  const auto normal = decide_vote(agent(BT::Normal), {0, -1}, 0, 100, rng);
  EXPECT_EQ(normal.vote, -1);
  EXPECT_FALSE(normal.malicious);

  const auto off_target = decide_vote(agent(BT::OrchSlander), {0, 1}, 0, 100, rng);
  EXPECT_EQ(off_target.vote, 1);
  EXPECT_FALSE(off_target.malicious);
  const auto slander = decide_vote(agent(BT::OrchSlander), {7, 1}, 0, 100, rng);
  EXPECT_EQ(slander.vote, -1);
  EXPECT_TRUE(slander.malicious);
  const auto whitewash = decide_vote(agent(BT::OrchWhitewash), {7, -1}, 0, 100, rng);
  EXPECT_EQ(whitewash.vote, 1);
  EXPECT_TRUE(whitewash.malicious);

  try {
    decide_vote(agent(BT::Normal), {1, 1}, 0, 100, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SelfVoteRequest);
  }
}

TEST(DecideVote, TrollAlwaysInverts) {
  Rng rng(2);
  const auto troll = agent(BT::Troll);
  for (int i = 0; i < 1000; ++i) {
    const int truth = rng.sign();
    const auto d = decide_vote(troll, {0, truth}, i, 1000, rng);
    EXPECT_EQ(d.vote, -truth);
    EXPECT_TRUE(d.malicious);
  }
}

TEST(DecideVote, TraitorPhaseSplit) {
  Rng rng(3);
  auto traitor = agent(BT::Traitor, 0.9);
  traitor.traitor_honest_fraction = 0.6;
  const std::uint64_t horizon = 5000;
  std::size_t malicious = 0;
  for (std::uint64_t step = 0; step < horizon; ++step) {
    const auto d = decide_vote(traitor, {0, 1}, step, horizon, rng);
    malicious += d.malicious;
    if (step >= 3000) {
      EXPECT_EQ(d.vote, -1);
    }
  }
  EXPECT_NEAR(static_cast<double>(malicious) / horizon, 0.4, 0.05);
}

TEST(DecideVote, RandomMeanNearZero) {
  Rng rng(4);
  long sum = 0;
  for (int i = 0; i < 10000; ++i) sum += decide_vote(agent(BT::Random), {0, 1}, i, 10000, rng).vote;
  EXPECT_LT(std::abs(sum / 10000.0), 0.05);
}

TEST(DecideVote, NormalAccuracy) {
  Rng rng(5);
  const auto normal = agent(BT::Normal, 0.9);
  int correct = 0;
  for (int i = 0; i < 10000; ++i) correct += decide_vote(normal, {0, 1}, i, 10000, rng).vote == 1;
  EXPECT_NEAR(correct / 10000.0, 0.9, 3 * std::sqrt(0.09 / 10000));
}

TEST(DecidePost, Examples) {
  Rng rng(6);
  const auto a = agent(BT::Normal);
  for (int i = 0; i < 100; ++i) {
    const auto t = decide_post(a, 1.0, rng);
    EXPECT_EQ(t.ground_truth, 1);
    EXPECT_FALSE(t.malicious);
    const auto f = decide_post(a, 0.0, rng);
    EXPECT_EQ(f.ground_truth, -1);
    EXPECT_TRUE(f.malicious);
  }
  int trues = 0;
  for (int i = 0; i < 10000; ++i) trues += decide_post(a, 0.5, rng).ground_truth == 1;
  // Binomial 3σ bound: 3·sqrt(0.25/10⁴) = 0.015.
  EXPECT_NEAR(trues / 10000.0, 0.5, 0.015);
}

TEST(DecideVote, DeterministicStreams) {
  const auto a = agent(BT::Normal, 0.7);
  Rng r1(8), r2(8);
  for (int i = 0; i < 200; ++i)
    EXPECT_EQ(decide_vote(a, {0, 1}, i, 200, r1).vote, decide_vote(a, {0, 1}, i, 200, r2).vote);
}

TEST(Names, RoundTrip) {
  for (auto t : kAllBehaviors) EXPECT_EQ(behavior_from_string(to_string(t)), t);
  EXPECT_FALSE(behavior_from_string("nobody").has_value());
  EXPECT_FALSE(is_attacker(BT::Target));
  EXPECT_TRUE(is_attacker(BT::Traitor));
}

}  // namespace
}  // namespace crowdledger::population
