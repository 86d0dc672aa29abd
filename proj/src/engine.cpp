// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowdledger/error.hpp"
#include "crowdledger/rng.hpp"

namespace crowdledger::engine {

using population::AgentProfile;
using population::BehaviorType;

void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& what) { throw Error(Errc::ConfigInvalid, what); };
  if (c.n_users < 2) fail("n_users must be at least 2");
  if (c.n_stories < 1) fail("n_stories must be at least 1");
  if (c.n_votes < c.n_stories) fail("n_votes must be >= n_stories");
  if (!(c.true_ratio >= 0.0 && c.true_ratio <= 1.0)) fail("true_ratio outside [0,1]");
  if (c.attacker_true_ratio && !(*c.attacker_true_ratio >= 0.0 && *c.attacker_true_ratio <= 1.0))
    fail("attacker_true_ratio outside [0,1]");
  if (!(c.consensus_threshold > 0.0 && c.consensus_threshold <= 1.0))
    fail("consensus_threshold outside (0,1]");
  if (!(c.blend_alpha >= 0.0 && c.blend_alpha <= 1.0)) fail("blend_alpha outside [0,1]");
  if (!(c.equilibrium.tau > 0.0)) fail("tau must be positive");
  if (c.equilibrium.c_min < 1) fail("c_min must be at least 1");
  if (c.max_votes_per_story < 1) fail("max_votes_per_story must be at least 1");
  population::validate(c.population);
}

double compute_crowd_score(std::span<const int> votes) {
  if (votes.empty()) throw Error(Errc::NoVotes, "crowd score needs at least one vote");
  long long sum = 0;
  for (int v : votes) sum += v;
  return static_cast<double>(sum) / static_cast<double>(votes.size());
}

std::optional<SettlementResult> settle(StoryId story, std::span<const int> votes,
                                       double classifier_score, double alpha, double theta,
                                       bool forced) {
  SettlementResult r;
  r.story_id = story;
  r.crowd_score = votes.empty() ? 0.0 : compute_crowd_score(votes);
  r.classifier_score = classifier_score;
  r.final_score = alpha * classifier_score + (1.0 - alpha) * r.crowd_score;
  r.vote_count = votes.size();
  if (!forced && std::abs(r.final_score) < theta) return std::nullopt;
  r.consensus_label = r.final_score >= 0.0 ? 1 : -1;
  return r;
}

std::map<UserId, Reputation> apply_rewards(int consensus_label, UserId poster,
                                           std::span<const ledger::VoteEntry> votes,
                                           const RewardSchedule& rewards,
                                           std::optional<int> ground_truth) {
  std::map<UserId, Reputation> deltas;
  for (const auto& v : votes)
    deltas[v.user] += v.value == consensus_label ? rewards.voter_correct : rewards.voter_wrong;
  const int poster_basis =
      rewards.poster_by_ground_truth && ground_truth ? *ground_truth : consensus_label;
  deltas[poster] += poster_basis == 1 ? rewards.poster_true : rewards.poster_false;
  return deltas;
}

std::vector<ActionEvent> SimulationResult::story_events(StoryId story) const {
  std::vector<ActionEvent> out;
  for (const auto& e : events)
    if (e.story == story) out.push_back(e);
  return out;
}

TrajectoryRow reputation_snapshot(const ledger::Chain& chain,
                                  std::span<const AgentProfile> agents, ledger::Step step) {
  TrajectoryRow row;
  row.step = step;
  std::array<double, population::kAllBehaviors.size()> sum{};
  std::array<std::size_t, population::kAllBehaviors.size()> count{};
  for (const auto& a : agents) {
    const auto k = static_cast<std::size_t>(a.behavior);
    sum[k] += static_cast<double>(chain.reputation(a.id));
    ++count[k];
  }
  for (std::size_t k = 0; k < sum.size(); ++k)
    if (count[k] > 0) row.means[k] = sum[k] / static_cast<double>(count[k]);
  return row;
}

namespace {

struct LiveStory {
  StoryId id = 0;
  UserId poster = 0;
  int truth = 1;
  std::vector<int> votes;
  std::vector<ledger::VoteEntry> entries;
  std::vector<ActionEvent> events;
  std::vector<bool> voters;
  dynamics::VoteSeries series;
};

class World {
 public:
  World(const ScenarioConfig& config, const StoryScorer* scorer)
      : config_(config), scorer_(scorer), rng_(Rng::splitmix(config.seed ^ 0x73696d756c617465ULL)) {
    auto pop = config.population;
    pop.seed = config.seed;
    result_.agents = population::build_population(pop, config.n_users);
    result_.alpha_used = scorer ? config.blend_alpha : 0.0;
    result_.horizon = config.n_stories + config.n_votes;
    interval_ = config.trajectory_interval ? config.trajectory_interval
                                           : std::max<std::uint64_t>(1, result_.horizon / 100);
  }

  SimulationResult run() {
    const std::uint64_t horizon = result_.horizon;
    std::size_t next_story = 0;
    auto post_slot = [&](std::size_t k) { return k * horizon / config_.n_stories; };

    for (std::uint64_t step = 0; step < horizon; ++step) {
      if (step % interval_ == 0)
        result_.trajectory.push_back(reputation_snapshot(result_.chain, result_.agents, step));
      if (next_story < config_.n_stories && post_slot(next_story) == step) {
        post(next_story++, step);
      } else {
        vote(step);
      }
    }
    // Budget exhausted: close every story still open, oldest first.
    while (!open_.empty()) settle_story(open_.front(), SettleReason::BudgetEnd, horizon, true);
    result_.trajectory.push_back(reputation_snapshot(result_.chain, result_.agents, horizon));
    return std::move(result_);
  }

 private:
  void post(StoryId id, ledger::Step step) {
    const auto& poster = result_.agents[rng_.index(result_.agents.size())];
    const double ratio = population::is_attacker(poster.behavior) && config_.attacker_true_ratio
                             ? *config_.attacker_true_ratio
                             : config_.true_ratio;
    const auto decision = population::decide_post(poster, ratio, rng_);
    result_.chain.post_story(poster.id, id, step);

    LiveStory s;
    s.id = id;
    s.poster = poster.id;
    s.truth = decision.ground_truth;
    s.voters.assign(result_.agents.size(), false);
    ActionEvent e{step, poster.id, id, ActionType::Post, 1, decision.ground_truth,
                  decision.malicious};
    s.events.push_back(e);
    result_.events.push_back(e);
    result_.stories[id] = {poster.id, decision.ground_truth, step};
    live_.emplace(id, std::move(s));
    open_.push_back(id);
  }

  void vote(ledger::Step step) {
    if (open_.empty()) return;
    const std::size_t attempts = 2 * result_.agents.size();
    std::vector<StoryId> candidates, focused;
    for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
      const AgentProfile& agent = result_.agents[rng_.index(result_.agents.size())];
      candidates.clear();
      focused.clear();
      for (StoryId id : open_) {
        const auto& s = live_.at(id);
        if (s.poster == agent.id || s.voters[agent.id]) continue;
        candidates.push_back(id);
        if (config_.coalition_seeks_targets && population::is_orchestrated(agent.behavior) &&
            agent.targets.contains(s.poster))
          focused.push_back(id);
      }
      if (candidates.empty()) continue;
      const auto& pool = focused.empty() ? candidates : focused;
      cast(agent, pool[rng_.index(pool.size())], step);
      return;
    }
  }

  void cast(const AgentProfile& agent, StoryId id, ledger::Step step) {
    LiveStory& s = live_.at(id);
    const auto decision =
        population::decide_vote(agent, {s.poster, s.truth}, step, result_.horizon, rng_);
    result_.chain.submit_vote(agent.id, id, decision.vote, step);
    s.voters[agent.id] = true;
    s.votes.push_back(decision.vote);
    s.entries.push_back({agent.id, decision.vote, step});
    s.series.push(decision.vote);
    ActionEvent e{step, agent.id, id, ActionType::Vote, decision.vote, s.truth, decision.malicious};
    s.events.push_back(e);
    result_.events.push_back(e);

    const auto report = dynamics::assess(s.series, config_.equilibrium);
    if (report.stable && settle_story(id, SettleReason::Equilibrium, step, false)) return;
    if (s.votes.size() >= config_.max_votes_per_story)
      settle_story(id, SettleReason::VoteCap, step, true);
  }

  bool settle_story(StoryId id, SettleReason reason, ledger::Step step, bool forced) {
    LiveStory& s = live_.at(id);
    const double classifier = scorer_ ? (*scorer_)(s.events) : 0.0;
    auto result = settle(id, s.votes, classifier, result_.alpha_used,
                         config_.consensus_threshold, forced);
    if (!result) return false;
    result->reason = reason;
    result->step = step;
    result->reward_deltas =
        apply_rewards(result->consensus_label, s.poster, s.entries, config_.rewards, s.truth);
    result_.chain.settle_story(id, result->consensus_label, result->reward_deltas, step);
    result_.chain.commit();
    result_.settlements.push_back(std::move(*result));
    open_.erase(std::find(open_.begin(), open_.end(), id));
    live_.erase(id);
    return true;
  }

  const ScenarioConfig& config_;
  const StoryScorer* scorer_;
  Rng rng_;
  SimulationResult result_;
  std::uint64_t interval_ = 1;
  std::map<StoryId, LiveStory> live_;
  std::vector<StoryId> open_;
};

}  // namespace

SimulationResult run_simulation(const ScenarioConfig& config, const StoryScorer* scorer) {
  validate(config);
  return World(config, scorer).run();
}

}  // namespace crowdledger::engine
