// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "crowdledger/error.hpp"
#include "crowdledger/ledger.hpp"

namespace crowdledger::config {

using nlohmann::json;
using population::BehaviorType;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& reason) {
  throw Error(Errc::ValidationError, field + ": " + reason);
}

/// Reads the keys of one JSON object, remembering which were consumed so the
/// rest can be rejected.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) invalid(where(), "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const json* v = find(key);
    if (!v) return;
    out = convert<T>(*v, field(key));
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    out = convert<T>(*v, field(key));
  }

  const json* find(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!seen_.contains(key)) invalid(field(key), "unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  template <class T>
  static T convert(const json& v, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) invalid(name, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) invalid(name, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) invalid(name, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) invalid(name, "expected a finite number");
      return d;
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        invalid(name, "expected a non-negative integer");
      return static_cast<T>(v.get<std::uint64_t>());
    } else {
      if (!v.is_number_integer()) invalid(name, "expected an integer");
      return static_cast<T>(v.get<std::int64_t>());
    }
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

constexpr std::pair<BehaviorType, const char*> kKeys[] = {
    {BehaviorType::Normal, "normal"},
    {BehaviorType::Troll, "troll"},
    {BehaviorType::Random, "random"},
    {BehaviorType::Traitor, "traitor"},
    {BehaviorType::OrchSlander, "orch_slander"},
    {BehaviorType::OrchWhitewash, "orch_whitewash"},
    {BehaviorType::Target, "target"},
};

std::map<BehaviorType, double> parse_percentages(const json& node, const std::string& path) {
  Reader r(node, path);
  std::map<BehaviorType, double> out;
  for (const auto& [type, key] : kKeys) {
    std::optional<double> v;
    r.get(key, v);
    if (!v) continue;
    if (*v < 0.0) invalid(r.field(key), "must be non-negative");
    out[type] = *v;
  }
  std::optional<double> orchestrated;
  r.get("orchestrated", orchestrated);
  if (orchestrated) {
    if (out.contains(BehaviorType::OrchSlander) || out.contains(BehaviorType::OrchWhitewash))
      invalid(r.field("orchestrated"), "cannot be combined with orch_slander or orch_whitewash");
    if (*orchestrated < 0.0) invalid(r.field("orchestrated"), "must be non-negative");
    out[BehaviorType::OrchSlander] = *orchestrated / 2.0;
    out[BehaviorType::OrchWhitewash] = *orchestrated / 2.0;
  }
  r.finish();
  if (out.empty()) invalid(path, "no behaviour types given");
  double sum = 0.0;
  for (const auto& [type, p] : out) sum += p;
  if (std::abs(sum - 100.0) > 1e-9) {
    std::ostringstream os;
    os << "percentages sum to " << sum << ", expected 100";
    invalid(path, os.str());
  }
  return out;
}

json percentages_json(const std::map<BehaviorType, double>& percentages) {
  json out = json::object();
  for (const auto& [type, p] : percentages) out[std::string(percentage_key(type))] = p;
  return out;
}

void parse_population(const json& node, population::PopulationConfig& pop) {
  Reader r(node, "population");
  if (const json* p = r.find("percentages")) pop.percentages = parse_percentages(*p, "population.percentages");
  r.get("accuracy_normal", pop.accuracy_normal);
  r.get("traitor_honest_fraction", pop.traitor_honest_fraction);
  r.finish();
  if (!(pop.accuracy_normal >= 0.0 && pop.accuracy_normal <= 1.0))
    invalid("population.accuracy_normal", "outside [0,1]");
  if (!(pop.traitor_honest_fraction >= 0.0 && pop.traitor_honest_fraction <= 1.0))
    invalid("population.traitor_honest_fraction", "outside [0,1]");
}

void parse_training(const json& node, const std::string& path, classifiers::TrainingConfig& t) {
  Reader r(node, path);
  r.get("epochs", t.epochs);
  r.get("batch_size", t.batch_size);
  r.get("validation_fraction", t.validation_fraction);
  r.get("learning_rate", t.learning_rate);
  r.finish();
  if (t.epochs < 1) invalid(path + ".epochs", "must be at least 1");
  if (t.batch_size < 1) invalid(path + ".batch_size", "must be at least 1");
  if (!(t.validation_fraction >= 0.0 && t.validation_fraction < 1.0))
    invalid(path + ".validation_fraction", "outside [0,1)");
  if (!(t.learning_rate > 0.0)) invalid(path + ".learning_rate", "must be positive");
}

json training_json(const classifiers::TrainingConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"validation_fraction", t.validation_fraction},
          {"learning_rate", t.learning_rate}};
}

void parse_model(const json& node, experiment::PipelineConfig& p) {
  Reader r(node, "model");
  if (const json* a = r.find("action")) {
    Reader ar(*a, "model.action");
    auto& c = p.action;
    ar.get("window", c.window);
    ar.get("channels", c.channels);
    ar.get("kernel", c.kernel);
    ar.get("pool", c.pool);
    ar.get("dropout", c.dropout);
    ar.get("story_dropout", c.story_dropout);
    std::string target = c.target == classifiers::ActionTarget::Malice ? "malice" : "effective_truth";
    ar.get("target", target);
    if (target == "malice") c.target = classifiers::ActionTarget::Malice;
    else if (target == "effective_truth") c.target = classifiers::ActionTarget::EffectiveTruth;
    else invalid("model.action.target", "expected \"malice\" or \"effective_truth\"");
    ar.finish();
    if (c.window < 1) invalid("model.action.window", "must be at least 1");
    if (c.channels < 1) invalid("model.action.channels", "must be at least 1");
    if (c.kernel < 1 || c.kernel > c.window) invalid("model.action.kernel", "must be in [1, window]");
    if (c.pool < 1 || c.pool > c.window - c.kernel + 1)
      invalid("model.action.pool", "must be in [1, window - kernel + 1]");
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) invalid("model.action.dropout", "outside [0,1)");
    if (!(c.story_dropout >= 0.0 && c.story_dropout <= 1.0))
      invalid("model.action.story_dropout", "outside [0,1]");
  }
  if (const json* s = r.find("story")) {
    Reader sr(*s, "model.story");
    sr.get("hidden", p.story.hidden);
    sr.get("max_length", p.story.max_length);
    sr.get("dropout", p.story.dropout);
    sr.finish();
    if (p.story.hidden < 1) invalid("model.story.hidden", "must be at least 1");
    if (p.story.max_length < 1) invalid("model.story.max_length", "must be at least 1");
    if (!(p.story.dropout >= 0.0 && p.story.dropout < 1.0)) invalid("model.story.dropout", "outside [0,1)");
  }
  if (const json* t = r.find("action_training")) parse_training(*t, "model.action_training", p.action_training);
  if (const json* t = r.find("story_training")) parse_training(*t, "model.story_training", p.story_training);
  r.get("train_fraction", p.train_fraction);
  r.finish();
  if (!(p.train_fraction > 0.0 && p.train_fraction < 1.0)) invalid("model.train_fraction", "outside (0,1)");
}

void parse_sweep(const json& node, const engine::ScenarioConfig& base, SweepSpec& s) {
  Reader r(node, "sweep");
  r.get("runs", s.runs);
  r.get("normal_min", s.normal_min);
  r.get("normal_max", s.normal_max);
  r.get("min_share", s.min_share);
  r.get("replicates", s.replicates);
  if (const json* g = r.find("grid")) {
    if (!g->is_array()) invalid("sweep.grid", "expected an array");
    if (g->empty()) invalid("sweep.grid", "empty grid");
    s.grid_mode = true;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const std::string path = "sweep.grid[" + std::to_string(i) + "]";
      Reader cr((*g)[i], path);
      SweepCell cell;
      cell.label = "cell" + std::to_string(i);
      cell.n_users = base.n_users;
      cell.n_stories = base.n_stories;
      cell.n_votes = base.n_votes;
      cr.get("label", cell.label);
      cr.get("n_users", cell.n_users);
      cr.get("n_stories", cell.n_stories);
      cr.get("n_votes", cell.n_votes);
      const json* p = cr.find("percentages");
      if (!p) invalid(path + ".percentages", "missing");
      cell.percentages = parse_percentages(*p, path + ".percentages");
      cr.finish();
      s.grid.push_back(std::move(cell));
    }
  }
  r.finish();
  if (s.runs < 1) invalid("sweep.runs", "must be at least 1");
  if (s.replicates < 1) invalid("sweep.replicates", "must be at least 1");
  if (s.min_share < 0) invalid("sweep.min_share", "must be non-negative");
  if (s.normal_min < 0 || s.normal_min > s.normal_max) invalid("sweep.normal_min", "must be in [0, normal_max]");
  if (100 - s.normal_max < 6 * s.min_share) invalid("sweep.normal_max", "leaves no room for the minimum shares");
}

}  // namespace

std::string_view percentage_key(BehaviorType type) {
  for (const auto& [t, key] : kKeys)
    if (t == type) return key;
  return "unknown";
}

RunConfig parse_config(const json& document) {
  RunConfig out;
  auto& sc = out.pipeline.scenario;
  Reader r(document, "");
  r.get("n_users", sc.n_users);
  r.get("n_stories", sc.n_stories);
  r.get("n_votes", sc.n_votes);
  r.get("seed", sc.seed);
  r.get("true_ratio", sc.true_ratio);
  r.get("attacker_true_ratio", sc.attacker_true_ratio);
  r.get("max_votes_per_story", sc.max_votes_per_story);
  r.get("consensus_threshold", sc.consensus_threshold);
  r.get("blend_alpha", sc.blend_alpha);
  r.get("coalition_seeks_targets", sc.coalition_seeks_targets);
  r.get("trajectory_interval", sc.trajectory_interval);
  if (const json* p = r.find("population")) parse_population(*p, sc.population);
  if (const json* e = r.find("equilibrium")) {
    Reader er(*e, "equilibrium");
    er.get("tau", sc.equilibrium.tau);
    er.get("c_min", sc.equilibrium.c_min);
    er.finish();
  }
  if (const json* w = r.find("rewards")) {
    Reader wr(*w, "rewards");
    wr.get("voter_correct", sc.rewards.voter_correct);
    wr.get("voter_wrong", sc.rewards.voter_wrong);
    wr.get("poster_true", sc.rewards.poster_true);
    wr.get("poster_false", sc.rewards.poster_false);
    wr.get("poster_by_ground_truth", sc.rewards.poster_by_ground_truth);
    wr.finish();
  }
  if (const json* m = r.find("model")) parse_model(*m, out.pipeline);
  if (const json* s = r.find("sweep")) parse_sweep(*s, sc, out.sweep);
  r.finish();

  try {
    engine::validate(sc);
  } catch (const Error& e) {
    throw Error(Errc::ValidationError, std::string("scenario: ") + e.what());
  }
  return out;
}

RunConfig parse_config_text(std::string_view text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
  return parse_config(document);
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

json to_json(const RunConfig& config) {
  const auto& p = config.pipeline;
  const auto& sc = p.scenario;
  json out;
  out["n_users"] = sc.n_users;
  out["n_stories"] = sc.n_stories;
  out["n_votes"] = sc.n_votes;
  out["seed"] = sc.seed;
  out["true_ratio"] = sc.true_ratio;
  out["attacker_true_ratio"] = sc.attacker_true_ratio ? json(*sc.attacker_true_ratio) : json(nullptr);
  out["max_votes_per_story"] = sc.max_votes_per_story;
  out["consensus_threshold"] = sc.consensus_threshold;
  out["blend_alpha"] = sc.blend_alpha;
  out["coalition_seeks_targets"] = sc.coalition_seeks_targets;
  out["trajectory_interval"] = sc.trajectory_interval;
  out["population"] = {{"percentages", percentages_json(sc.population.percentages)},
                       {"accuracy_normal", sc.population.accuracy_normal},
                       {"traitor_honest_fraction", sc.population.traitor_honest_fraction}};
  out["equilibrium"] = {{"tau", sc.equilibrium.tau}, {"c_min", sc.equilibrium.c_min}};
  out["rewards"] = {{"voter_correct", sc.rewards.voter_correct},
                    {"voter_wrong", sc.rewards.voter_wrong},
                    {"poster_true", sc.rewards.poster_true},
                    {"poster_false", sc.rewards.poster_false},
                    {"poster_by_ground_truth", sc.rewards.poster_by_ground_truth}};
  out["model"] = {
      {"action",
       {{"window", p.action.window},
        {"channels", p.action.channels},
        {"kernel", p.action.kernel},
        {"pool", p.action.pool},
        {"dropout", p.action.dropout},
        {"story_dropout", p.action.story_dropout},
        {"target", p.action.target == classifiers::ActionTarget::Malice ? "malice" : "effective_truth"}}},
      {"story",
       {{"hidden", p.story.hidden}, {"max_length", p.story.max_length}, {"dropout", p.story.dropout}}},
      {"action_training", training_json(p.action_training)},
      {"story_training", training_json(p.story_training)},
      {"train_fraction", p.train_fraction}};
  const auto& s = config.sweep;
  json sweep = {{"runs", s.runs},
                {"normal_min", s.normal_min},
                {"normal_max", s.normal_max},
                {"min_share", s.min_share},
                {"replicates", s.replicates}};
  if (s.grid_mode) {
    json grid = json::array();
    for (const auto& c : s.grid)
      grid.push_back({{"label", c.label},
                      {"n_users", c.n_users},
                      {"n_stories", c.n_stories},
                      {"n_votes", c.n_votes},
                      {"percentages", percentages_json(c.percentages)}});
    sweep["grid"] = std::move(grid);
  }
  out["sweep"] = std::move(sweep);
  return out;
}

std::string digest(const RunConfig& config) {
  const std::string text = to_json(config).dump();
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  return ledger::to_hex(ledger::sha256({bytes, text.size()}));
}

}  // namespace crowdledger::config
