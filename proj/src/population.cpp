// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowdledger/error.hpp"

namespace crowdledger::population {

std::string_view to_string(BehaviorType type) {
  switch (type) {
    case BehaviorType::Normal: return "Normal";
    case BehaviorType::Troll: return "Troll";
    case BehaviorType::Random: return "Random";
    case BehaviorType::Traitor: return "Traitor";
    case BehaviorType::OrchSlander: return "OrchSlander";
    case BehaviorType::OrchWhitewash: return "OrchWhitewash";
    case BehaviorType::Target: return "Target";
  }
  return "Unknown";
}

std::optional<BehaviorType> behavior_from_string(std::string_view name) {
  for (auto t : kAllBehaviors)
    if (to_string(t) == name) return t;
  return std::nullopt;
}

bool is_orchestrated(BehaviorType type) {
  return type == BehaviorType::OrchSlander || type == BehaviorType::OrchWhitewash;
}

bool is_attacker(BehaviorType type) {
  return type != BehaviorType::Normal && type != BehaviorType::Target;
}

void validate(const PopulationConfig& config) {
  double sum = 0.0;
  for (const auto& [type, pct] : config.percentages) {
    if (!(pct >= 0.0) || !std::isfinite(pct))
      throw Error(Errc::BadPercentages, std::string(to_string(type)) + " percentage is negative");
    sum += pct;
  }
  if (std::abs(sum - 100.0) > 1e-9)
    throw Error(Errc::BadPercentages, "percentages sum to " + std::to_string(sum));
  if (!(config.accuracy_normal >= 0.0 && config.accuracy_normal <= 1.0))
    throw Error(Errc::BadPercentages, "accuracy_normal outside [0,1]");
  if (!(config.traitor_honest_fraction >= 0.0 && config.traitor_honest_fraction <= 1.0))
    throw Error(Errc::BadPercentages, "traitor_honest_fraction outside [0,1]");
}

std::map<BehaviorType, std::size_t> apportion(const std::map<BehaviorType, double>& percentages,
                                              std::size_t n) {
  struct Share {
    BehaviorType type;
    std::size_t whole;
    double remainder;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [type, pct] : percentages) {
    const double quota = pct * static_cast<double>(n) / 100.0;
    const double whole = std::floor(quota + 1e-9);
    shares.push_back({type, static_cast<std::size_t>(whole), std::max(0.0, quota - whole)});
    assigned += static_cast<std::size_t>(whole);
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return shares[a].remainder > shares[b].remainder + 1e-12;
  });
  for (std::size_t k = 0; assigned < n && k < order.size(); ++k, ++assigned)
    ++shares[order[k]].whole;

  std::map<BehaviorType, std::size_t> counts;
  for (const auto& s : shares) counts[s.type] = s.whole;
  return counts;
}

std::vector<AgentProfile> build_population(const PopulationConfig& config, std::size_t n) {
  if (n == 0) throw Error(Errc::BadPercentages, "population size must be positive");
  validate(config);
  const auto counts = apportion(config.percentages, n);

  std::vector<BehaviorType> slots;
  slots.reserve(n);
  for (auto type : kAllBehaviors) {
    auto it = counts.find(type);
    if (it != counts.end()) slots.insert(slots.end(), it->second, type);
  }
  Rng rng(config.seed ^ 0x706f70756c617465ULL);
  for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng.index(i)]);

  std::vector<AgentProfile> agents(n);
  std::vector<UserId> target_ids;
  bool has_slander = false;
  bool has_whitewash = false;
  for (std::size_t i = 0; i < n; ++i) {
    auto& a = agents[i];
    a.id = i;
    a.behavior = slots[i];
    a.accuracy = config.accuracy_normal;
    a.traitor_honest_fraction = config.traitor_honest_fraction;
    if (a.behavior == BehaviorType::Target) target_ids.push_back(a.id);
    has_slander |= a.behavior == BehaviorType::OrchSlander;
    has_whitewash |= a.behavior == BehaviorType::OrchWhitewash;
  }
  if ((has_slander || has_whitewash) && target_ids.empty())
    throw Error(Errc::BadPercentages, "orchestrated agents require Target agents");

  const std::size_t split = (has_slander && has_whitewash) ? (target_ids.size() + 1) / 2
                            : has_slander                  ? target_ids.size()
                                                           : 0;
  const std::set<UserId> slander_targets(target_ids.begin(), target_ids.begin() + split);
  const std::set<UserId> whitewash_targets(target_ids.begin() + split, target_ids.end());
  for (auto& a : agents) {
    if (a.behavior == BehaviorType::OrchSlander) {
      a.group_id = 0;
      a.targets = slander_targets;
    } else if (a.behavior == BehaviorType::OrchWhitewash) {
      a.group_id = 0;
      a.targets = whitewash_targets;
    }
  }
  return agents;
}

namespace {

VoteDecision honest_vote(const AgentProfile& agent, int truth, Rng& rng) {
  const bool correct = rng.bernoulli(agent.accuracy);
  return {correct ? truth : -truth, false};
}

}  // namespace

VoteDecision decide_vote(const AgentProfile& agent, const StoryView& story, std::uint64_t step,
                         std::uint64_t horizon, Rng& rng) {
  if (agent.id == story.poster_id)
    throw Error(Errc::SelfVoteRequest, "agent " + std::to_string(agent.id) + " posted the story");
  const int truth = story.ground_truth;
  switch (agent.behavior) {
    case BehaviorType::Normal:
    case BehaviorType::Target:
      return honest_vote(agent, truth, rng);
    case BehaviorType::Troll:
      return {-truth, true};
    case BehaviorType::Random:
      return {rng.sign(), true};
    case BehaviorType::Traitor:
      if (static_cast<double>(step) <
          agent.traitor_honest_fraction * static_cast<double>(horizon))
        return honest_vote(agent, truth, rng);
      return {-truth, true};
    case BehaviorType::OrchSlander:
      if (agent.targets.contains(story.poster_id)) return {-1, true};
      return honest_vote(agent, truth, rng);
    case BehaviorType::OrchWhitewash:
      if (agent.targets.contains(story.poster_id)) return {1, true};
      return honest_vote(agent, truth, rng);
  }
  return honest_vote(agent, truth, rng);
}

PostDecision decide_post(const AgentProfile& /*agent*/, double true_ratio, Rng& rng) {
  const int truth = rng.bernoulli(true_ratio) ? 1 : -1;
  return {truth, truth == -1};
}

}  // namespace crowdledger::population
