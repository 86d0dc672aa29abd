// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "crowdledger/error.hpp"
#include "crowdledger/rng.hpp"

namespace crowdledger::classifiers {

namespace {

constexpr std::uint64_t kDropoutSalt = 0x64726f706f7574ULL;

/// Shared mini-batch loop over (input, scalar target) samples.
template <class Model>
TrainingRun fit(Model& model, const std::vector<nn::Tensor>& inputs,
                const std::vector<double>& targets, const TrainingConfig& config) {
  if (config.epochs == 0 || config.batch_size == 0)
    throw Error(Errc::ConfigInvalid, "epochs and batch_size must be positive");
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0))
    throw Error(Errc::ConfigInvalid, "validation_fraction outside [0,1)");

  Rng rng(config.seed);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto n_val = static_cast<std::size_t>(config.validation_fraction *
                                              static_cast<double>(inputs.size()));
  std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));

  TrainingRun run;
  run.config = config;
  run.train_size = train.size();
  run.validation_size = val.size();

  auto params = model.parameters();
  nn::Adam adam({config.learning_rate});
  nn::zero_grads(params);
  nn::Tensor target({1});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.index(i)]);
    double total = 0.0;
    std::size_t in_batch = 0;
    for (std::size_t idx : train) {
      target[0] = targets[idx];
      const auto loss = nn::mse(model.forward(inputs[idx], true), target);
      if (!std::isfinite(loss.loss)) throw Error(Errc::NonFiniteLoss, "training loss diverged");
      total += loss.loss;
      model.backward(loss.grad);
      if (++in_batch == config.batch_size) {
        adam.step(params, static_cast<double>(in_batch));
        in_batch = 0;
      }
    }
    if (in_batch > 0) adam.step(params, static_cast<double>(in_batch));
    run.train_loss.push_back(train.empty() ? 0.0 : total / static_cast<double>(train.size()));

    if (!val.empty()) {
      double v = 0.0;
      for (std::size_t idx : val) {
        target[0] = targets[idx];
        v += nn::mse(model.forward(inputs[idx], false), target).loss;
      }
      run.validation_loss.push_back(v / static_cast<double>(val.size()));
    }
  }
  return run;
}

}  // namespace

std::size_t embedding_dim(std::size_t n) {
  if (n < 2) throw Error(Errc::ConfigInvalid, "embedding needs at least 2 ids");
  std::size_t d = 0;
  while ((std::size_t{1} << d) < n) ++d;
  return d;
}

// --- ActionClassifier --------------------------------------------------------

ActionClassifier::ActionClassifier(std::size_t n_users, std::size_t n_stories,
                                   ActionClassifierConfig config)
    : n_users_(n_users),
      n_stories_(n_stories),
      user_dim_(embedding_dim(n_users)),
      story_dim_(embedding_dim(n_stories)),
      config_(config),
      users_(n_users, user_dim_),
      stories_(n_stories, story_dim_),
      story_mask_rng_(Rng::splitmix(config.seed ^ 0x73746f7279ULL)) {
  const auto& c = config_;
  if (c.window < c.kernel || c.kernel == 0 || c.pool == 0 || (c.window - c.kernel + 1) < c.pool ||
      c.channels == 0)
    throw Error(Errc::ConfigInvalid, "window too short for kernel and pool");
  const std::size_t pooled = (c.window - c.kernel + 1) / c.pool;
  body_.add(std::make_unique<nn::Conv1D>(row_width(), c.channels, c.kernel));
  body_.add(std::make_unique<nn::Tanh>());
  body_.add(std::make_unique<nn::MaxPool1D>(c.pool));
  body_.add(std::make_unique<nn::Dropout>(c.dropout, Rng::splitmix(c.seed ^ kDropoutSalt)));
  body_.add(std::make_unique<nn::Dense>(pooled * c.channels, 1));
  body_.add(std::make_unique<nn::Tanh>());

  Rng rng(c.seed);
  nn::initialize(users_, rng);
  nn::initialize(stories_, rng);
  for (std::size_t i = 0; i < body_.size(); ++i) nn::initialize(body_.layer(i), rng);
}

nn::Tensor ActionClassifier::raw_window(std::span<const ActionEvent> events) const {
  const std::size_t w = config_.window;
  nn::Tensor raw({w, kRawColumns});
  const std::size_t take = std::min(w, events.size());
  const std::size_t pad = w - take;
  for (std::size_t r = 0; r < pad; ++r) raw[r * kRawColumns] = -1.0;
  for (std::size_t k = 0; k < take; ++k) {
    const auto& e = events[events.size() - take + k];
    double* row = &raw.values[(pad + k) * kRawColumns];
    row[0] = static_cast<double>(e.user);
    row[1] = static_cast<double>(e.story);
    row[2] = static_cast<double>(static_cast<int>(e.type));
    row[3] = static_cast<double>(e.vote);
  }
  return raw;
}

nn::Tensor ActionClassifier::encode_window(const nn::Tensor& raw) {
  if (raw.shape.size() != 2 || raw.shape[1] != kRawColumns)
    throw Error(Errc::ShapeMismatch, "raw window must be [W, 4], got " + nn::shape_string(raw.shape));
  const std::size_t w = raw.shape[0];
  rows_.clear();
  std::vector<double> uid, sid;
  for (std::size_t r = 0; r < w; ++r) {
    if (raw[r * kRawColumns] < 0.0) continue;
    rows_.push_back(r);
    uid.push_back(raw[r * kRawColumns]);
    sid.push_back(raw[r * kRawColumns + 1]);
  }
  const std::size_t f = row_width();
  nn::Tensor x({w, f});
  if (rows_.empty()) return x;
  const nn::Tensor ue = users_.forward(nn::Tensor({uid.size()}, uid), false);
  const nn::Tensor se = stories_.forward(nn::Tensor({sid.size()}, sid), false);
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    double* row = &x.values[rows_[k] * f];
    std::copy_n(&ue.values[k * user_dim_], user_dim_, row);
    std::copy_n(&se.values[k * story_dim_], story_dim_, row + user_dim_);
    row[f - 2] = raw[rows_[k] * kRawColumns + 2];
    row[f - 1] = raw[rows_[k] * kRawColumns + 3];
  }
  return x;
}

nn::Tensor ActionClassifier::forward(const nn::Tensor& raw, bool training) {
  nn::Tensor x = encode_window(raw);
  story_masked_ = training && config_.story_dropout > 0.0 &&
                  story_mask_rng_.bernoulli(config_.story_dropout);
  if (story_masked_) {
    const std::size_t f = row_width();
    for (std::size_t r : rows_) std::fill_n(&x.values[r * f + user_dim_], story_dim_, 0.0);
  }
  return body_.forward(x, training);
}

nn::Tensor ActionClassifier::backward(const nn::Tensor& upstream) {
  const nn::Tensor gx = body_.backward(upstream);
  if (rows_.empty()) return gx;
  const std::size_t f = row_width();
  nn::Tensor gu({rows_.size(), user_dim_});
  nn::Tensor gs({rows_.size(), story_dim_});
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const double* row = &gx.values[rows_[k] * f];
    std::copy_n(row, user_dim_, &gu.values[k * user_dim_]);
    std::copy_n(row + user_dim_, story_dim_, &gs.values[k * story_dim_]);
  }
  users_.backward(gu);
  if (!story_masked_) stories_.backward(gs);
  return gx;
}

std::vector<nn::Tensor*> ActionClassifier::parameters() {
  std::vector<nn::Tensor*> p{&users_.table, &stories_.table};
  for (auto* t : body_.parameters()) p.push_back(t);
  return p;
}

double ActionClassifier::score(std::span<const ActionEvent> events) {
  return forward(raw_window(events), false)[0];
}

nlohmann::json ActionClassifier::manifest() const {
  const auto& c = config_;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& s : body_.specs()) layers.push_back(nn::to_json(s));
  return {{"model", "action"},
          {"n_users", n_users_},
          {"n_stories", n_stories_},
          {"user_dim", user_dim_},
          {"story_dim", story_dim_},
          {"window", c.window},
          {"channels", c.channels},
          {"kernel", c.kernel},
          {"pool", c.pool},
          {"dropout", c.dropout},
          {"target", c.target == ActionTarget::EffectiveTruth ? "effective_truth" : "malice"},
          {"seed", c.seed},
          {"layers", layers}};
}

void ActionClassifier::save(const std::filesystem::path& prefix) {
  nn::save_checkpoint(prefix, manifest(), parameters());
}

ActionClassifier ActionClassifier::load(const std::filesystem::path& prefix) {
  const auto m = nn::load_manifest(prefix);
  try {
    if (m.at("model") != "action") throw Error(Errc::ParseError, "not an action classifier");
    ActionClassifierConfig c;
    c.window = m.at("window");
    c.channels = m.at("channels");
    c.kernel = m.at("kernel");
    c.pool = m.at("pool");
    c.dropout = m.at("dropout");
    c.target = m.at("target") == "malice" ? ActionTarget::Malice : ActionTarget::EffectiveTruth;
    c.seed = m.at("seed");
    ActionClassifier model(m.at("n_users"), m.at("n_stories"), c);
    nn::load_parameters(prefix, model.parameters());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("action manifest: ") + e.what());
  }
}

// --- StoryClassifier ---------------------------------------------------------

StoryClassifier::StoryClassifier(StoryClassifierConfig config) : config_(config) {
  const auto& c = config_;
  if (c.hidden == 0 || c.max_length == 0)
    throw Error(Errc::ConfigInvalid, "hidden and max_length must be positive");
  const std::uint64_t drop = Rng::splitmix(c.seed ^ kDropoutSalt);
  body_.add(std::make_unique<nn::LSTM>(1, c.hidden, true));
  body_.add(std::make_unique<nn::Dropout>(c.dropout, drop));
  body_.add(std::make_unique<nn::LSTM>(c.hidden, c.hidden, false));
  body_.add(std::make_unique<nn::Dropout>(c.dropout, Rng::splitmix(drop)));
  body_.add(std::make_unique<nn::Dense>(c.hidden, 1));
  body_.add(std::make_unique<nn::Tanh>());
  Rng rng(c.seed);
  for (std::size_t i = 0; i < body_.size(); ++i) nn::initialize(body_.layer(i), rng);
}

nn::Tensor StoryClassifier::encode(std::span<const double> scores) const {
  const std::size_t len = config_.max_length;
  nn::Tensor x({len, 1});
  const std::size_t take = std::min(len, scores.size());
  std::copy(scores.end() - static_cast<std::ptrdiff_t>(take), scores.end(),
            x.values.end() - static_cast<std::ptrdiff_t>(take));
  return x;
}

nn::Tensor StoryClassifier::forward(const nn::Tensor& sequence, bool training) {
  return body_.forward(sequence, training);
}

nn::Tensor StoryClassifier::backward(const nn::Tensor& upstream) { return body_.backward(upstream); }

double StoryClassifier::classify(std::span<const double> scores) {
  return forward(encode(scores), false)[0];
}

nlohmann::json StoryClassifier::manifest() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& s : body_.specs()) layers.push_back(nn::to_json(s));
  return {{"model", "story"},
          {"hidden", config_.hidden},
          {"max_length", config_.max_length},
          {"dropout", config_.dropout},
          {"seed", config_.seed},
          {"layers", layers}};
}

void StoryClassifier::save(const std::filesystem::path& prefix) {
  nn::save_checkpoint(prefix, manifest(), parameters());
}

StoryClassifier StoryClassifier::load(const std::filesystem::path& prefix) {
  const auto m = nn::load_manifest(prefix);
  try {
    if (m.at("model") != "story") throw Error(Errc::ParseError, "not a story classifier");
    StoryClassifierConfig c;
    c.hidden = m.at("hidden");
    c.max_length = m.at("max_length");
    c.dropout = m.at("dropout");
    c.seed = m.at("seed");
    StoryClassifier model(c);
    nn::load_parameters(prefix, model.parameters());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("story manifest: ") + e.what());
  }
}

// --- Training and scoring ----------------------------------------------------

std::vector<std::vector<ActionEvent>> story_windows(const EventLog& log, std::size_t window) {
  std::map<ledger::StoryId, std::vector<ActionEvent>> history;
  std::vector<std::vector<ActionEvent>> out;
  out.reserve(log.size());
  for (const auto& e : log) {
    auto& h = history[e.story];
    h.push_back(e);
    const std::size_t take = std::min(window, h.size());
    out.emplace_back(h.end() - static_cast<std::ptrdiff_t>(take), h.end());
  }
  return out;
}

double action_target(const ActionEvent& event, ActionTarget target) {
  if (!event.malicious) throw Error(Errc::NoLabels, "event lacks a malicious annotation");
  const double benign = *event.malicious ? -1.0 : 1.0;
  return target == ActionTarget::EffectiveTruth ? benign * event.vote : benign;
}

ActionTraining train_action_classifier(const EventLog& log, std::size_t n_users,
                                       std::size_t n_stories, const ActionClassifierConfig& model,
                                       const TrainingConfig& training) {
  if (log.size() < 10 * model.window)
    throw Error(Errc::InsufficientData, "action training needs at least 10·W events");
  ActionClassifier classifier(n_users, n_stories, model);
  std::vector<nn::Tensor> inputs;
  std::vector<double> targets;
  inputs.reserve(log.size());
  targets.reserve(log.size());
  const auto windows = story_windows(log, model.window);
  for (std::size_t i = 0; i < log.size(); ++i) {
    inputs.push_back(classifier.raw_window(windows[i]));
    targets.push_back(action_target(log[i], model.target));
  }
  auto run = fit(classifier, inputs, targets, training);
  return {std::move(classifier), std::move(run)};
}

std::vector<double> score_actions(ActionClassifier& model, std::span<const ActionEvent> events) {
  std::vector<double> out;
  out.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) out.push_back(model.score(events.first(i + 1)));
  return out;
}

std::vector<double> contributions(ActionClassifier& model, std::span<const ActionEvent> story_events) {
  auto out = score_actions(model, story_events);
  if (model.config().target == ActionTarget::Malice)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= story_events[i].vote;
  return out;
}

StoryTraining train_story_classifier(std::span<const LabeledSequence> data,
                                     const StoryClassifierConfig& model,
                                     const TrainingConfig& training) {
  if (data.size() < 20) throw Error(Errc::InsufficientData, "story training needs 20 stories");
  StoryClassifier classifier(model);
  std::vector<nn::Tensor> inputs;
  std::vector<double> targets;
  for (const auto& s : data) {
    if (s.label != 1 && s.label != -1) throw Error(Errc::ValidationError, "story label must be ±1");
    inputs.push_back(classifier.encode(s.scores));
    targets.push_back(static_cast<double>(s.label));
  }
  auto run = fit(classifier, inputs, targets, training);
  return {std::move(classifier), std::move(run)};
}

double classify_story(ActionClassifier& actions, StoryClassifier& stories,
                      std::span<const ActionEvent> story_events) {
  return stories.classify(contributions(actions, story_events));
}

nlohmann::json to_json(const TrainingRun& run) {
  const auto& c = run.config;
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"validation_fraction", c.validation_fraction},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"train_size", run.train_size},
          {"validation_size", run.validation_size},
          {"train_loss", run.train_loss},
          {"validation_loss", run.validation_loss}};
}

}  // namespace crowdledger::classifiers
