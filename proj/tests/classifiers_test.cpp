// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "crowdledger/classifiers.hpp"
#include "crowdledger/error.hpp"
#include "crowdledger/metrics.hpp"

namespace crowdledger::classifiers {
namespace {

// Stories with one post and `votes` votes each. Users below `trolls` invert
// the truth; everybody else votes it exactly.
EventLog synthetic_log(std::size_t users, std::size_t trolls, std::size_t stories,
                       std::size_t votes, std::uint64_t seed) {
  Rng rng(seed);
  EventLog log;
  ledger::Step step = 0;
  for (std::size_t s = 0; s < stories; ++s) {
    const int truth = rng.sign();
    const auto poster = static_cast<ledger::UserId>(trolls + rng.index(users - trolls));
    log.push_back({step++, poster, s, ActionType::Post, 1, truth, false});
    std::vector<bool> used(users, false);
    used[poster] = true;
    for (std::size_t v = 0; v < votes; ++v) {
      std::uint64_t u;
      do u = rng.index(users); while (used[u]);
      used[u] = true;
      const bool troll = u < trolls;
      log.push_back({step++, u, s, ActionType::Vote, troll ? -truth : truth, truth, troll});
    }
  }
  return log;
}

std::vector<ActionEvent> events_of(const EventLog& log, ledger::StoryId story) {
  std::vector<ActionEvent> out;
  for (const auto& e : log)
    if (e.story == story) out.push_back(e);
  return out;
}

TrainingConfig quick_training(std::size_t epochs, std::uint64_t seed = 0) {
  return {epochs, 16, 0.1, 3e-3, seed};
}

TEST(Embedding, DimensionLaw) {
  EXPECT_EQ(embedding_dim(2), 1u);
  EXPECT_EQ(embedding_dim(3), 2u);
  EXPECT_EQ(embedding_dim(100), 7u);
  EXPECT_EQ(embedding_dim(128), 7u);
  EXPECT_EQ(embedding_dim(129), 8u);
  EXPECT_EQ(embedding_dim(500), 9u);
  EXPECT_THROW(embedding_dim(1), Error);
  for (std::size_t n = 2; n < 2000; n += 37)
    EXPECT_EQ(embedding_dim(n), static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))));
}

TEST(EncodeWindow, RowWidthAndPadding) {
  ActionClassifier big(100, 500);
  EXPECT_EQ(big.row_width(), 18u);
  ActionClassifier tiny(2, 2);
  EXPECT_EQ(tiny.row_width(), 4u);

  ActionClassifierConfig cfg;
  cfg.window = 5;
  ActionClassifier model(10, 10, cfg);
  const std::vector<ActionEvent> events{{0, 3, 2, ActionType::Post, 1}, {1, 4, 2, ActionType::Vote, -1}};
  const auto raw = model.raw_window(events);
  EXPECT_EQ(raw.shape, (nn::Shape{5, kRawColumns}));
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(raw[r * kRawColumns], -1.0);
  EXPECT_EQ(raw[3 * kRawColumns], 3.0);
  EXPECT_EQ(raw[4 * kRawColumns + 3], -1.0);

  const auto x = model.encode_window(raw);
  const std::size_t f = model.row_width();
  EXPECT_EQ(x.shape, (nn::Shape{5, f}));
  for (std::size_t i = 0; i < 3 * f; ++i) EXPECT_EQ(x[i], 0.0);
  EXPECT_EQ(x[3 * f + f - 2], 0.0);  // post type
  EXPECT_EQ(x[4 * f + f - 2], 1.0);  // vote type
  EXPECT_EQ(x[4 * f + f - 1], -1.0);

  const std::vector<ActionEvent> bad{{0, 10, 0, ActionType::Vote, 1}};
  try {
    model.encode_window(model.raw_window(bad));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IdOutOfRange);
  }
}

TEST(GradientCheck, ActionStack) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ActionClassifierConfig cfg;
    cfg.window = 6;
    cfg.channels = 4;
    cfg.seed = seed;
    ActionClassifier model(12, 20, cfg);
    const EventLog log = synthetic_log(12, 3, 2, 5, seed);
    const auto raw = model.raw_window(std::span(log).first(5));
    nn::Tensor target({1}, std::vector<double>{seed % 2 ? 0.5 : -0.5});
    EXPECT_LT(nn::gradient_check(model, raw, target), 1e-4) << seed;
  }
}

TEST(GradientCheck, StoryStack) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    StoryClassifierConfig cfg;
    cfg.hidden = 4;
    cfg.max_length = 8;
    cfg.seed = seed;
    StoryClassifier model(cfg);
    Rng rng(seed);
    std::vector<double> scores(6);
    for (auto& s : scores) s = rng.uniform(-1, 1);
    nn::Tensor target({1}, std::vector<double>{rng.uniform(-0.9, 0.9)});
    EXPECT_LT(nn::gradient_check(model, model.encode(scores), target), 1e-4) << seed;
  }
}

TEST(TrainAction, InsufficientData) {
  ActionClassifierConfig cfg;
  cfg.window = 16;
  const EventLog log = synthetic_log(10, 2, 5, 9, 1);  // 50 events
  try {
    train_action_classifier(log, 10, 5, cfg, quick_training(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientData);
  }
  EventLog unlabeled = synthetic_log(10, 2, 40, 9, 1);
  for (auto& e : unlabeled) e.malicious.reset();
  try {
    train_action_classifier(unlabeled, 10, 40, cfg, quick_training(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoLabels);
  }
}

// Benign alignment of each held-out event: contribution · vote, which is the
// action score itself under the malice target.
void expect_separable(ActionTarget target) {
  const std::size_t users = 40, stories = 200;
  const EventLog log = synthetic_log(users, 20, stories, 9, 7);  // 2000 events
  EventLog train;
  for (const auto& e : log)
    if (e.story < 160) train.push_back(e);

  ActionClassifierConfig cfg;
  cfg.target = target;
  cfg.story_dropout = 0.5;  // the pipeline setting; without it held-out stories lean on untrained embeddings
  auto trained = train_action_classifier(train, users, stories, cfg, quick_training(15));
  const auto& losses = trained.run.train_loss;
  EXPECT_LE(losses.back(), 0.8 * losses.front());

  std::vector<double> alignment;
  std::vector<int> benign;
  for (ledger::StoryId s = 160; s < stories; ++s) {
    const auto events = events_of(log, s);
    const auto c = contributions(trained.model, events);
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (events[i].type != ActionType::Vote) continue;
      alignment.push_back(c[i] * events[i].vote);
      benign.push_back(*events[i].malicious ? -1 : 1);
    }
  }
  EXPECT_GE(metrics::roc_auc(alignment, benign).auc, 0.95);
}

TEST(TrainAction, SeparatesTrollsUnderEffectiveTruth) { expect_separable(ActionTarget::EffectiveTruth); }
TEST(TrainAction, SeparatesTrollsUnderMalice) { expect_separable(ActionTarget::Malice); }

TEST(TrainAction, AllBenignFollowsVoteSign) {
  const std::size_t users = 30, stories = 120;
  const EventLog log = synthetic_log(users, 0, stories, 8, 3);
  EventLog train;
  for (const auto& e : log)
    if (e.story < 100) train.push_back(e);
  auto trained = train_action_classifier(train, users, stories, {}, quick_training(10));
  std::size_t agree = 0, total = 0;
  for (ledger::StoryId s = 100; s < stories; ++s) {
    const auto events = events_of(log, s);
    const auto scores = score_actions(trained.model, events);
    for (std::size_t i = 0; i < events.size(); ++i) {
      agree += (scores[i] > 0) == (events[i].vote > 0);
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(total), 0.9);
}

TEST(ScoreActions, RangeLengthDeterminism) {
  const EventLog log = synthetic_log(20, 4, 3, 10, 2);
  ActionClassifier model(20, 3);
  const auto events = events_of(log, 1);
  const auto a = score_actions(model, events);
  const auto b = score_actions(model, events);
  ASSERT_EQ(a.size(), events.size());
  EXPECT_EQ(a, b);
  for (double s : a) {
    EXPECT_GT(s, -1.0);
    EXPECT_LT(s, 1.0);
  }
  // Malice contributions carry the vote direction.
  ActionClassifierConfig malice;
  malice.target = ActionTarget::Malice;
  ActionClassifier m(20, 3, malice);
  const auto scores = score_actions(m, events);
  const auto contrib = contributions(m, events);
  for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(contrib[i], scores[i] * events[i].vote);
}

TEST(StoryWindows, TrailingPerStory) {
  const EventLog log = synthetic_log(20, 0, 3, 4, 1);
  const auto windows = story_windows(log, 3);
  ASSERT_EQ(windows.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    ASSERT_FALSE(windows[i].empty());
    EXPECT_LE(windows[i].size(), 3u);
    EXPECT_EQ(windows[i].back(), log[i]);
    for (const auto& e : windows[i]) EXPECT_EQ(e.story, log[i].story);
  }
}

std::vector<LabeledSequence> constant_sequences(std::size_t n, Rng& rng) {
  std::vector<LabeledSequence> data;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 ? 1 : -1;
    data.push_back({std::vector<double>(5 + rng.index(20), 0.9 * label), label});
  }
  return data;
}

double accuracy(StoryClassifier& model, const std::vector<LabeledSequence>& data) {
  std::size_t ok = 0;
  for (const auto& d : data) ok += (model.classify(d.scores) >= 0 ? 1 : -1) == d.label;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

TEST(TrainStory, SeparableSequences) {
  Rng rng(1);
  const auto train = constant_sequences(60, rng);
  const auto test = constant_sequences(40, rng);
  auto trained = train_story_classifier(train, {}, quick_training(5));
  EXPECT_EQ(trained.run.train_loss.size(), 5u);
  EXPECT_GE(accuracy(trained.model, test), 0.95);
}

TEST(TrainStory, ShuffledLabelsCarryNoSignal) {
  Rng rng(2);
  StoryClassifierConfig cfg;
  cfg.max_length = 16;
  auto train = constant_sequences(200, rng);
  auto test = constant_sequences(200, rng);
  for (auto* set : {&train, &test})
    for (auto& d : *set) d.label = rng.sign();
  auto trained = train_story_classifier(train, cfg, quick_training(3));
  const double acc = accuracy(trained.model, test);
  EXPECT_GE(acc, 0.35);
  EXPECT_LE(acc, 0.65);
}

TEST(TrainStory, InsufficientData) {
  const std::vector<LabeledSequence> one{{{0.5}, 1}};
  try {
    train_story_classifier(one, {}, quick_training(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientData);
  }
}

TEST(ClassifyStory, PaddingPathAndDeterminism) {
  ActionClassifier actions(10, 5);
  StoryClassifier stories;
  const std::vector<ActionEvent> post_only{{0, 2, 1, ActionType::Post, 1}};
  const double s = classify_story(actions, stories, post_only);
  EXPECT_GT(s, -1.0);
  EXPECT_LT(s, 1.0);
  EXPECT_EQ(classify_story(actions, stories, post_only), s);
  EXPECT_EQ(stories.encode(std::vector<double>{}).shape, (nn::Shape{64, 1}));
  const auto enc = stories.encode(std::vector<double>(100, 0.5));
  EXPECT_EQ(enc.shape, (nn::Shape{64, 1}));
}

TEST(ClassifyStory, FlippingVotesFlipsPrediction) {
  // Symmetric training data: honest unanimous crowds on both kinds of story.
  // The probe story id is never seen in training, so only the votes carry the
  // verdict rather than a memorised story embedding.
  const std::size_t users = 30, stories = 80;
  const EventLog log = synthetic_log(users, 0, stories, 8, 11);
  auto actions = train_action_classifier(log, users, stories + 1, {}, quick_training(8)).model;
  std::vector<LabeledSequence> data;
  for (ledger::StoryId s = 0; s < stories; ++s) {
    const auto events = events_of(log, s);
    data.push_back({contributions(actions, events), *events.front().story_truth});
  }
  StoryClassifierConfig scfg;
  scfg.max_length = 16;
  auto story = train_story_classifier(data, scfg, quick_training(6)).model;

  const ledger::StoryId probe = stories;
  std::vector<ActionEvent> up{{0, 0, probe, ActionType::Post, 1}}, down = up;
  for (ledger::UserId u = 1; u <= 8; ++u) {
    up.push_back({u, u, probe, ActionType::Vote, 1});
    down.push_back({u, u, probe, ActionType::Vote, -1});
  }
  EXPECT_GT(classify_story(actions, story, up), 0.0);
  EXPECT_LT(classify_story(actions, story, down), 0.0);
}

TEST(Checkpoint, SaveLoadPreservesScores) {
  const auto dir = std::filesystem::temp_directory_path() / "crowdledger_classifiers_test";
  std::filesystem::create_directories(dir);
  ActionClassifierConfig cfg;
  cfg.window = 4;
  cfg.target = ActionTarget::Malice;
  cfg.seed = 3;
  ActionClassifier actions(20, 5, cfg);
  StoryClassifierConfig scfg;
  scfg.max_length = 10;
  scfg.seed = 4;
  StoryClassifier story(scfg);
  actions.save(dir / "action");
  story.save(dir / "story");

  auto actions2 = ActionClassifier::load(dir / "action");
  auto story2 = StoryClassifier::load(dir / "story");
  EXPECT_EQ(actions2.config().target, ActionTarget::Malice);
  EXPECT_EQ(story2.config().max_length, 10u);
  const EventLog log = synthetic_log(20, 3, 5, 6, 5);
  const auto events = events_of(log, 2);
  EXPECT_EQ(score_actions(actions, events), score_actions(actions2, events));
  EXPECT_EQ(classify_story(actions, story, events), classify_story(actions2, story2, events));
  std::filesystem::remove_all(dir);
}

TEST(Training, Deterministic) {
  const EventLog log = synthetic_log(20, 5, 30, 6, 9);
  auto a = train_action_classifier(log, 20, 30, {}, quick_training(2, 5));
  auto b = train_action_classifier(log, 20, 30, {}, quick_training(2, 5));
  EXPECT_EQ(a.run.train_loss, b.run.train_loss);
  EXPECT_EQ(a.run.validation_loss, b.run.validation_loss);
  EXPECT_EQ(a.run.train_size + a.run.validation_size, log.size());
}

}  // namespace
}  // namespace crowdledger::classifiers
