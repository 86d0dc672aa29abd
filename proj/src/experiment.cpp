// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "crowdledger/error.hpp"
#include "crowdledger/rng.hpp"

namespace crowdledger::experiment {

using population::BehaviorType;

namespace {

constexpr std::uint64_t kSplitSalt = 0x73706c6974ULL;

std::map<ledger::StoryId, std::vector<ActionEvent>> group_by_story(const EventLog& log) {
  std::map<ledger::StoryId, std::vector<ActionEvent>> out;
  for (const auto& e : log) out[e.story].push_back(e);
  return out;
}

metrics::ClassificationMetrics metrics_of(const std::vector<int>& predicted,
                                          const std::vector<int>& actual) {
  if (predicted.empty()) return {};
  return metrics::classification_metrics(metrics::confusion(predicted, actual));
}

std::optional<metrics::RocCurve> roc_of(const std::vector<double>& scores,
                                        const std::vector<int>& labels) {
  try {
    return metrics::roc_auc(scores, labels);
  } catch (const Error& e) {
    if (e.code() != Errc::OneClassOnly) throw;
    return std::nullopt;
  }
}

/// Scores every story in `world`; `is_train` marks the training side.
void score_world(PipelineResult& result, TrainedModels& models, double alpha,
                 const std::set<ledger::StoryId>& train_stories) {
  const auto& world = result.bootstrap;
  const auto by_story = group_by_story(world.events);
  std::map<ledger::StoryId, double> crowd;
  for (const auto& s : world.settlements) crowd[s.story_id] = s.crowd_score;

  std::vector<int> pred_train, act_train, pred_test, act_test, crowd_test;
  std::vector<double> score_train, score_test;
  double mal_sum = 0.0, ben_sum = 0.0;
  std::size_t mal_n = 0, ben_n = 0;
  for (const auto& [id, events] : by_story) {
    const auto& info = world.stories.at(id);
    const bool train = train_stories.contains(id);
    const auto scores = classifiers::contributions(models.action, events);
    StoryOutcome o;
    o.story = id;
    o.truth = info.truth;
    o.crowd_score = crowd.count(id) ? crowd.at(id) : 0.0;
    o.classifier_score = models.story.classify(scores);
    o.final_score = alpha * o.classifier_score + (1.0 - alpha) * o.crowd_score;
    o.predicted = o.final_score >= 0.0 ? 1 : -1;
    o.train = train;
    result.outcomes.push_back(o);
    (train ? pred_train : pred_test).push_back(o.predicted);
    (train ? act_train : act_test).push_back(o.truth);
    (train ? score_train : score_test).push_back(o.final_score);
    if (train) continue;
    crowd_test.push_back(o.crowd_score >= 0.0 ? 1 : -1);

    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      if (!e.malicious) continue;
      const double alignment = scores[i] * e.vote;
      if (*e.malicious) {
        mal_sum += alignment;
        ++mal_n;
      } else {
        ben_sum += alignment;
        ++ben_n;
      }
      if (e.type != ActionType::Vote || !*e.malicious) continue;
      auto& d = result.detection[world.agents.at(e.user).behavior];
      ++d.total;
      d.detected += alignment < 0.0;
    }
  }
  result.train_metrics = metrics_of(pred_train, act_train);
  result.test_metrics = metrics_of(pred_test, act_test);
  result.crowd_metrics = metrics_of(crowd_test, act_test);
  result.malicious_alignment = mal_n ? mal_sum / static_cast<double>(mal_n) : 0.0;
  result.benign_alignment = ben_n ? ben_sum / static_cast<double>(ben_n) : 0.0;
  if (!score_train.empty()) result.roc_train = roc_of(score_train, act_train);
  if (!score_test.empty()) result.roc_test = roc_of(score_test, act_test);
}

}  // namespace

PipelineConfig with_seed(PipelineConfig config, std::uint64_t seed) {
  config.scenario.seed = seed;
  config.action.seed = Rng::splitmix(seed ^ 0xa1);
  config.story.seed = Rng::splitmix(seed ^ 0xb2);
  config.action_training.seed = Rng::splitmix(seed ^ 0xc3);
  config.story_training.seed = Rng::splitmix(seed ^ 0xd4);
  return config;
}

std::map<BehaviorType, double> standard_mix(double normal_percent) {
  const double each = (90.0 - normal_percent) / 4.0;
  return {{BehaviorType::Normal, normal_percent}, {BehaviorType::Troll, each},
          {BehaviorType::Random, each},           {BehaviorType::Traitor, each},
          {BehaviorType::OrchSlander, each / 2},  {BehaviorType::OrchWhitewash, each / 2},
          {BehaviorType::Target, 10.0}};
}

std::map<BehaviorType, double> final_reputation(const engine::SimulationResult& world) {
  std::map<BehaviorType, double> sum;
  std::map<BehaviorType, std::size_t> count;
  for (const auto& a : world.agents) {
    sum[a.behavior] += static_cast<double>(world.chain.reputation(a.id));
    ++count[a.behavior];
  }
  for (auto& [type, s] : sum) s /= static_cast<double>(count[type]);
  return sum;
}

PipelineResult run_pipeline(const PipelineConfig& config, std::optional<TrainedModels>* models) {
  PipelineResult result;
  result.bootstrap = engine::run_simulation(config.scenario);
  result.final_reputation = final_reputation(result.bootstrap);
  const auto& world = result.bootstrap;

  // Random story split.
  std::vector<ledger::StoryId> ids;
  for (const auto& [id, info] : world.stories) ids.push_back(id);
  Rng rng(Rng::splitmix(config.scenario.seed ^ kSplitSalt));
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
  const auto n_train = static_cast<std::size_t>(config.train_fraction * static_cast<double>(ids.size()));
  const std::set<ledger::StoryId> train_stories(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

  EventLog train_log;
  for (const auto& e : world.events)
    if (train_stories.contains(e.story)) train_log.push_back(e);

  auto action = classifiers::train_action_classifier(train_log, config.scenario.n_users,
                                                     config.scenario.n_stories, config.action,
                                                     config.action_training);
  result.action_run = std::move(action.run);

  std::vector<classifiers::LabeledSequence> sequences;
  for (const auto& [id, events] : group_by_story(train_log))
    sequences.push_back({classifiers::contributions(action.model, events), world.stories.at(id).truth});
  auto story = classifiers::train_story_classifier(sequences, config.story, config.story_training);
  result.story_run = std::move(story.run);

  TrainedModels trained{std::move(action.model), std::move(story.model)};
  score_world(result, trained, config.scenario.blend_alpha, train_stories);
  if (models) models->emplace(std::move(trained));
  return result;
}

PipelineResult evaluate_world(engine::SimulationResult world, TrainedModels& models, double alpha) {
  PipelineResult result;
  result.bootstrap = std::move(world);
  result.final_reputation = final_reputation(result.bootstrap);
  score_world(result, models, alpha, {});
  return result;
}

std::map<BehaviorType, double> random_mix(Rng& rng, int normal_min, int normal_max, int min_share) {
  static constexpr BehaviorType kOthers[] = {BehaviorType::Troll,       BehaviorType::Random,
                                             BehaviorType::Traitor,     BehaviorType::OrchSlander,
                                             BehaviorType::OrchWhitewash, BehaviorType::Target};
  constexpr int kOtherCount = 6;
  if (normal_min > normal_max || normal_min < 0 || 100 - normal_max < kOtherCount * min_share)
    throw Error(Errc::ValidationError, "sweep bounds leave no room for the minimum shares");
  const int normal =
      normal_min + static_cast<int>(rng.index(static_cast<std::uint64_t>(normal_max - normal_min + 1)));
  std::map<BehaviorType, double> mix{{BehaviorType::Normal, normal}};
  int shares[kOtherCount];
  std::fill(std::begin(shares), std::end(shares), min_share);
  const int spare = 100 - normal - kOtherCount * min_share;
  for (int i = 0; i < spare; ++i) ++shares[rng.index(kOtherCount)];
  for (int i = 0; i < kOtherCount; ++i) mix[kOthers[i]] = shares[i];
  return mix;
}

namespace {

/// Runs job(i) for i in [0, n) on up to `jobs` threads; rethrows the first
/// failure after all threads finish.
template <class Job>
void parallel_for(std::size_t n, std::size_t jobs, Job job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

SweepRun run_one(std::size_t index, std::uint64_t seed, std::string cell, const PipelineConfig& cfg) {
  const auto r = run_pipeline(cfg);
  return {index, seed, std::move(cell), {cfg.scenario.population.percentages, r.test_metrics}, r.roc_test};
}

}  // namespace

std::vector<SweepRun> run_sweep(const PipelineConfig& base, std::size_t runs,
                                std::uint64_t base_seed, std::size_t jobs) {
  if (runs == 0) throw Error(Errc::ValidationError, "sweep needs at least one run");
  std::vector<SweepRun> out(runs);
  parallel_for(runs, jobs, [&](std::size_t i) {
    const std::uint64_t seed = base_seed + i;
    Rng mix_rng(Rng::splitmix(seed ^ 0x6d6978ULL));
    PipelineConfig cfg = with_seed(base, seed);
    cfg.scenario.population.percentages = random_mix(mix_rng);
    out[i] = run_one(i, seed, "random", cfg);
  });
  return out;
}

std::vector<SweepRun> run_grid(const std::vector<GridCell>& cells, std::size_t replicates,
                               std::uint64_t base_seed, std::size_t jobs) {
  if (cells.empty()) throw Error(Errc::ValidationError, "empty grid");
  if (replicates == 0) throw Error(Errc::ValidationError, "grid needs at least one replicate");
  const std::size_t runs = cells.size() * replicates;
  std::vector<SweepRun> out(runs);
  parallel_for(runs, jobs, [&](std::size_t i) {
    const auto& cell = cells[i / replicates];
    const std::uint64_t seed = base_seed + i;
    out[i] = run_one(i, seed, cell.label, with_seed(cell.config, seed));
  });
  return out;
}

RocBand roc_band(const std::vector<metrics::RocCurve>& curves, std::size_t grid) {
  if (grid < 2) throw Error(Errc::ValidationError, "ROC grid needs two points");
  RocBand band;
  for (std::size_t g = 0; g < grid; ++g) {
    const double fpr = static_cast<double>(g) / static_cast<double>(grid - 1);
    std::vector<double> tprs;
    for (const auto& c : curves) tprs.push_back(metrics::tpr_at(c, fpr));
    band.fpr.push_back(fpr);
    if (tprs.size() >= 2) {
      const auto ci = metrics::mean_ci(tprs);
      band.mean_tpr.push_back(ci.mean);
      band.half_width.push_back(ci.half_width);
    } else {
      band.mean_tpr.push_back(tprs.empty() ? 0.0 : tprs.front());
      band.half_width.push_back(0.0);
    }
  }
  return band;
}

}  // namespace crowdledger::experiment
