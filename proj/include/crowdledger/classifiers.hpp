// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdledger/events.hpp"
#include "crowdledger/nn.hpp"

namespace crowdledger::classifiers {

/// ⌈log₂ n⌉ for n ≥ 2. Throws ConfigInvalid below 2.
std::size_t embedding_dim(std::size_t n);

/// Training target for one action.
enum class ActionTarget : std::uint8_t {
  /// vote · (benign ? +1 : −1): the action's effective contribution to truth.
  EffectiveTruth,
  /// benign ? +1 : −1, ignoring the vote direction.
  Malice,
};

struct ActionClassifierConfig {
  std::size_t window = 16;
  std::size_t channels = 32;
  std::size_t kernel = 3;
  std::size_t pool = 2;
  double dropout = 0.2;
  /// Probability of zeroing a window's story embedding while training.
  double story_dropout = 0.0;
  ActionTarget target = ActionTarget::EffectiveTruth;
  std::uint64_t seed = 0;
};

struct StoryClassifierConfig {
  std::size_t hidden = 32;
  std::size_t max_length = 64;
  double dropout = 0.2;
  std::uint64_t seed = 0;
};

struct TrainingConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double validation_fraction = 0.1;
  double learning_rate = 2e-3;
  std::uint64_t seed = 0;
};

struct TrainingRun {
  TrainingConfig config;
  std::vector<double> train_loss;       // one entry per epoch
  std::vector<double> validation_loss;  // empty when there is no validation split
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
};

nlohmann::json to_json(const TrainingRun& run);

/// Columns of a raw window row: user, story, type, vote. Padding rows carry
/// user = −1 and encode to all-zero rows.
inline constexpr std::size_t kRawColumns = 4;

/// User and story embeddings concatenated with raw type and vote, then
/// Conv1D → Tanh → MaxPool1D → Dropout → Dense(1) → Tanh.
class ActionClassifier {
 public:
  ActionClassifier(std::size_t n_users, std::size_t n_stories, ActionClassifierConfig config = {});

  std::size_t n_users() const { return n_users_; }
  std::size_t n_stories() const { return n_stories_; }
  std::size_t user_dim() const { return user_dim_; }
  std::size_t story_dim() const { return story_dim_; }
  std::size_t row_width() const { return user_dim_ + story_dim_ + 2; }
  const ActionClassifierConfig& config() const { return config_; }

  /// Trailing `window` events as a [W, 4] tensor, left-padded.
  nn::Tensor raw_window(std::span<const ActionEvent> events) const;
  /// [W, row_width] embedded input. Throws IdOutOfRange.
  nn::Tensor encode_window(const nn::Tensor& raw);

  nn::Tensor forward(const nn::Tensor& raw, bool training);
  nn::Tensor backward(const nn::Tensor& upstream);
  std::vector<nn::Tensor*> parameters();

  /// Eval-mode score of the trailing window of `events`.
  double score(std::span<const ActionEvent> events);

  nlohmann::json manifest() const;
  void save(const std::filesystem::path& prefix);
  static ActionClassifier load(const std::filesystem::path& prefix);

 private:
  std::size_t n_users_, n_stories_, user_dim_, story_dim_;
  ActionClassifierConfig config_;
  nn::Embedding users_;
  nn::Embedding stories_;
  nn::Sequential body_;
  std::vector<std::size_t> rows_;  // non-padding rows of the last forward
  Rng story_mask_rng_;
  bool story_masked_ = false;
};

/// LSTM(seq) → Dropout → LSTM(last) → Dropout → Dense(1) → Tanh over a score
/// sequence left-padded with zeros (or left-truncated) to max_length.
class StoryClassifier {
 public:
  explicit StoryClassifier(StoryClassifierConfig config = {});

  const StoryClassifierConfig& config() const { return config_; }

  /// [max_length, 1], keeping the most recent scores.
  nn::Tensor encode(std::span<const double> scores) const;

  nn::Tensor forward(const nn::Tensor& sequence, bool training);
  nn::Tensor backward(const nn::Tensor& upstream);
  std::vector<nn::Tensor*> parameters() { return body_.parameters(); }

  double classify(std::span<const double> scores);

  nlohmann::json manifest() const;
  void save(const std::filesystem::path& prefix);
  static StoryClassifier load(const std::filesystem::path& prefix);

 private:
  StoryClassifierConfig config_;
  nn::Sequential body_;
};

/// Trailing windows per event: each event's window holds the preceding events
/// of the same story (in log order) ending at that event.
std::vector<std::vector<ActionEvent>> story_windows(const EventLog& log, std::size_t window);

/// Target for one annotated event. Throws NoLabels when the malicious flag is
/// missing.
double action_target(const ActionEvent& event, ActionTarget target);

struct ActionTraining {
  ActionClassifier model;
  TrainingRun run;
};

/// Mini-batch Adam on MSE. Throws InsufficientData below 10·W events.
ActionTraining train_action_classifier(const EventLog& log, std::size_t n_users,
                                       std::size_t n_stories, const ActionClassifierConfig& model,
                                       const TrainingConfig& training);

/// One eval-mode score per event, each on the window ending at that event.
std::vector<double> score_actions(ActionClassifier& model, std::span<const ActionEvent> story_events);

/// Effective truth contribution per event: the score itself under
/// EffectiveTruth, vote·score under Malice. This is the Story Classifier input.
std::vector<double> contributions(ActionClassifier& model, std::span<const ActionEvent> story_events);

struct LabeledSequence {
  std::vector<double> scores;
  int label = 1;
};

struct StoryTraining {
  StoryClassifier model;
  TrainingRun run;
};

/// Throws InsufficientData below 20 sequences.
StoryTraining train_story_classifier(std::span<const LabeledSequence> data,
                                     const StoryClassifierConfig& model,
                                     const TrainingConfig& training);

/// Story Classifier output on the contribution sequence of `story_events`.
double classify_story(ActionClassifier& actions, StoryClassifier& stories,
                      std::span<const ActionEvent> story_events);

}  // namespace crowdledger::classifiers
