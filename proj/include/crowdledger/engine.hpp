// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "crowdledger/dynamics.hpp"
#include "crowdledger/events.hpp"
#include "crowdledger/ledger.hpp"
#include "crowdledger/population.hpp"

namespace crowdledger::engine {

using ledger::Reputation;
using ledger::StoryId;
using ledger::UserId;

struct RewardSchedule {
  Reputation voter_correct = 1;
  Reputation voter_wrong = -2;
  Reputation poster_true = 2;
  Reputation poster_false = -4;
  /// Judge the poster by hidden ground truth instead of the consensus label.
  bool poster_by_ground_truth = false;
};

struct ScenarioConfig {
  std::size_t n_users = 100;
  std::size_t n_stories = 200;
  std::size_t n_votes = 1000;
  double true_ratio = 0.5;
  /// Truth ratio for stories posted by attacker types; defaults to true_ratio.
  std::optional<double> attacker_true_ratio;
  population::PopulationConfig population;
  dynamics::EquilibriumParams equilibrium;
  std::size_t max_votes_per_story = 50;
  double consensus_threshold = 0.5;
  double blend_alpha = 0.5;
  RewardSchedule rewards;
  /// Orchestrated agents vote on their targets' open stories when any exist.
  bool coalition_seeks_targets = true;
  /// Steps between reputation trajectory samples; 0 picks horizon / 100.
  std::size_t trajectory_interval = 0;
  std::uint64_t seed = 0;
};

/// Throws ConfigInvalid (or BadPercentages for the population mix).
void validate(const ScenarioConfig& config);

enum class SettleReason : std::uint8_t { Equilibrium, VoteCap, BudgetEnd };

struct SettlementResult {
  StoryId story_id = 0;
  double crowd_score = 0.0;
  double classifier_score = 0.0;
  double final_score = 0.0;
  int consensus_label = 1;
  SettleReason reason = SettleReason::Equilibrium;
  ledger::Step step = 0;
  std::size_t vote_count = 0;
  std::map<UserId, Reputation> reward_deltas;
};

/// Arithmetic mean of the votes. Throws NoVotes when empty.
double compute_crowd_score(std::span<const int> votes);

/// Blends α·classifier + (1−α)·crowd. Returns nullopt (not ready) when
/// |final| < θ unless `forced`; a forced settlement takes sign(final) with
/// sign(0) = +1. An empty vote list counts as crowd score 0.
std::optional<SettlementResult> settle(StoryId story, std::span<const int> votes,
                                       double classifier_score, double alpha, double theta,
                                       bool forced = false);

/// Voter rewards against the consensus label; the poster by consensus label,
/// or by `ground_truth` when the schedule asks for it.
std::map<UserId, Reputation> apply_rewards(int consensus_label, UserId poster,
                                           std::span<const ledger::VoteEntry> votes,
                                           const RewardSchedule& rewards,
                                           std::optional<int> ground_truth = std::nullopt);

/// Classifier score in (−1, 1) for a story given its events so far.
using StoryScorer = std::function<double(std::span<const ActionEvent>)>;

struct StoryInfo {
  UserId poster = 0;
  int truth = 1;
  ledger::Step posted_at = 0;
};

/// Mean reputation per behaviour type, sampled over time. A type with no
/// agents has no value (written as an empty CSV field).
struct TrajectoryRow {
  ledger::Step step = 0;
  std::array<std::optional<double>, population::kAllBehaviors.size()> means{};
};

struct SimulationResult {
  ledger::Chain chain;
  EventLog events;
  std::vector<SettlementResult> settlements;
  std::vector<population::AgentProfile> agents;
  std::map<StoryId, StoryInfo> stories;
  std::vector<TrajectoryRow> trajectory;
  std::uint64_t horizon = 0;
  double alpha_used = 0.0;

  /// Events of one story in scheduling order.
  std::vector<ActionEvent> story_events(StoryId story) const;
};

/// One world: stories are posted at evenly spaced steps over a horizon of
/// n_stories + n_votes slots, every other slot is a vote by a random agent on
/// a random eligible open story. Stories settle at equilibrium (subject to the
/// consensus threshold), at the vote cap, or when the budget runs out.
/// Without a scorer the blend weight is forced to 0.
SimulationResult run_simulation(const ScenarioConfig& config, const StoryScorer* scorer = nullptr);

TrajectoryRow reputation_snapshot(const ledger::Chain& chain,
                                  std::span<const population::AgentProfile> agents,
                                  ledger::Step step);

}  // namespace crowdledger::engine
