// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crowdledger/ledger.hpp"
#include "crowdledger/rng.hpp"

namespace crowdledger::population {

using ledger::UserId;

enum class BehaviorType : std::uint8_t {
  Normal,
  Troll,
  Random,
  Traitor,
  OrchSlander,
  OrchWhitewash,
  Target,
};

inline constexpr std::array<BehaviorType, 7> kAllBehaviors = {
    BehaviorType::Normal,      BehaviorType::Troll,         BehaviorType::Random,
    BehaviorType::Traitor,     BehaviorType::OrchSlander,   BehaviorType::OrchWhitewash,
    BehaviorType::Target};

std::string_view to_string(BehaviorType type);
std::optional<BehaviorType> behavior_from_string(std::string_view name);
bool is_orchestrated(BehaviorType type);
/// Behaviors that can act maliciously (everything except Normal and Target).
bool is_attacker(BehaviorType type);

struct AgentProfile {
  UserId id = 0;
  BehaviorType behavior = BehaviorType::Normal;
  double accuracy = 0.9;
  std::optional<int> group_id;
  std::set<UserId> targets;
  double traitor_honest_fraction = 0.6;
};

struct PopulationConfig {
  std::map<BehaviorType, double> percentages{{BehaviorType::Normal, 100.0}};
  double accuracy_normal = 0.9;
  double traitor_honest_fraction = 0.6;
  std::uint64_t seed = 0;
};

/// Throws BadPercentages unless entries are non-negative and sum to 100 ± 1e-9.
void validate(const PopulationConfig& config);

/// Largest-remainder apportionment of n over the percentages (ties broken in
/// BehaviorType order).
std::map<BehaviorType, std::size_t> apportion(const std::map<BehaviorType, double>& percentages,
                                              std::size_t n);

/// Builds n agents with ids 0..n-1. Behaviors are apportioned, then assigned
/// to ids by a seeded shuffle. All orchestrated agents form group 0; Target
/// agents are split evenly between the slander and whitewash coalitions when
/// both exist.
std::vector<AgentProfile> build_population(const PopulationConfig& config, std::size_t n);

struct StoryView {
  UserId poster_id = 0;
  int ground_truth = 1;
};

struct VoteDecision {
  int vote = 1;
  bool malicious = false;
};

struct PostDecision {
  int ground_truth = 1;
  bool malicious = false;
};

/// Throws SelfVoteRequest if the agent is the story's poster.
VoteDecision decide_vote(const AgentProfile& agent, const StoryView& story, std::uint64_t step,
                         std::uint64_t horizon, Rng& rng);

/// Only false-story posting counts as malicious.
PostDecision decide_post(const AgentProfile& agent, double true_ratio, Rng& rng);

}  // namespace crowdledger::population
