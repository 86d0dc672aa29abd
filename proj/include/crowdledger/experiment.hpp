// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdledger/classifiers.hpp"
#include "crowdledger/engine.hpp"
#include "crowdledger/metrics.hpp"
#include "crowdledger/population.hpp"

namespace crowdledger::experiment {

struct PipelineConfig {
  engine::ScenarioConfig scenario;
  /// Malice target on a short unpooled window; see the README for the
  /// detection trade-off against the wide effective-truth window.
  classifiers::ActionClassifierConfig action{3, 32, 3, 1, 0.2, 0.5, classifiers::ActionTarget::Malice, 0};
  classifiers::StoryClassifierConfig story;
  classifiers::TrainingConfig action_training{30, 32, 0.1, 2e-3, 0};
  classifiers::TrainingConfig story_training{8, 16, 0.1, 3e-3, 0};
  /// Fraction of bootstrap stories used for training; the rest is held out.
  double train_fraction = 0.8;
};

/// Copies the scenario seed into every model and training seed.
PipelineConfig with_seed(PipelineConfig config, std::uint64_t seed);

/// Mix of the standard scenario: normal share N, the remaining 90 − N split
/// evenly over troll, random, traitor and orchestrated (halved between
/// slander and whitewash), targets fixed at 10.
std::map<population::BehaviorType, double> standard_mix(double normal_percent);

struct StoryOutcome {
  ledger::StoryId story = 0;
  int truth = 1;
  double crowd_score = 0.0;
  double classifier_score = 0.0;
  double final_score = 0.0;
  int predicted = 1;
  bool train = false;
};

struct Detection {
  std::size_t detected = 0;
  std::size_t total = 0;
  double rate() const { return total ? static_cast<double>(detected) / static_cast<double>(total) : 0.0; }
};

struct PipelineResult {
  engine::SimulationResult bootstrap;
  classifiers::TrainingRun action_run;
  classifiers::TrainingRun story_run;
  std::vector<StoryOutcome> outcomes;
  metrics::ClassificationMetrics test_metrics;   // blended decision on held-out stories
  metrics::ClassificationMetrics crowd_metrics;  // crowd score alone on held-out stories
  metrics::ClassificationMetrics train_metrics;
  /// Held-out malicious votes whose action score opposes the vote.
  std::map<population::BehaviorType, Detection> detection;
  /// Mean of score·vote over held-out malicious and benign events.
  double malicious_alignment = 0.0;
  double benign_alignment = 0.0;
  std::optional<metrics::RocCurve> roc_train;
  std::optional<metrics::RocCurve> roc_test;
  /// Final mean reputation per behaviour type in the bootstrap world.
  std::map<population::BehaviorType, double> final_reputation;
};

struct TrainedModels {
  classifiers::ActionClassifier action;
  classifiers::StoryClassifier story;
};

/// Runs the bootstrap world (crowd only), splits its stories at random,
/// trains both classifiers on the training stories and scores the held-out
/// stories with α·classifier + (1 − α)·crowd.
PipelineResult run_pipeline(const PipelineConfig& config, std::optional<TrainedModels>* models = nullptr);

/// Re-scores a finished bootstrap world with already trained models, treating
/// every story as held out.
PipelineResult evaluate_world(engine::SimulationResult world, TrainedModels& models,
                              double alpha);

std::map<population::BehaviorType, double> final_reputation(const engine::SimulationResult& world);

/// Sweep mix: normal uniform in [normal_min, normal_max], every other category
/// (troll, random, traitor, orchestrated slander, orchestrated whitewash,
/// target) at least `min_share`, the rest spread at random. Integer percents.
std::map<population::BehaviorType, double> random_mix(Rng& rng, int normal_min = 30,
                                                      int normal_max = 70, int min_share = 5);

struct SweepRun {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string cell;
  metrics::RunRecord record;
  std::optional<metrics::RocCurve> roc_test;
};

/// One pipeline per run, seeds base_seed + index, executed on up to `jobs`
/// threads. Results are ordered by index regardless of scheduling.
std::vector<SweepRun> run_sweep(const PipelineConfig& base, std::size_t runs,
                                std::uint64_t base_seed, std::size_t jobs = 1);

struct GridCell {
  std::string label;
  PipelineConfig config;
};

/// `replicates` runs of every cell, cell-major; run i uses seed base_seed + i.
std::vector<SweepRun> run_grid(const std::vector<GridCell>& cells, std::size_t replicates,
                               std::uint64_t base_seed, std::size_t jobs = 1);

struct RocBand {
  std::vector<double> fpr;
  std::vector<double> mean_tpr;
  std::vector<double> half_width;
};

/// Mean TPR with a 95% t-interval across replicate curves on an even FPR grid.
RocBand roc_band(const std::vector<metrics::RocCurve>& curves, std::size_t grid = 101);

}  // namespace crowdledger::experiment
