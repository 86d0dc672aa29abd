// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

// crowdledger command-line front end: simulate, train, evaluate, sweep,
// birdwatch and report. Exit codes: 0 success, 1 invalid input, 2 runtime
// failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdledger/birdwatch.hpp"
#include "crowdledger/config.hpp"
#include "crowdledger/error.hpp"
#include "crowdledger/events.hpp"
#include "crowdledger/experiment.hpp"
#include "crowdledger/metrics.hpp"
#include "crowdledger/report.hpp"
#include "crowdledger/rng.hpp"

#ifndef CROWDLEDGER_VERSION
#define CROWDLEDGER_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace crowdledger;

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> alpha;
  std::optional<std::size_t> runs;
  std::size_t jobs = 1;
  std::string models;
  std::string notes, ratings, labels;
  bool synthetic = false;
  std::vector<std::string> run_dirs;
};

/// Artifact directory plus the list of files written into it.
class RunDir {
 public:
  explicit RunDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& root() const { return root_; }

  template <class Writer>
  void write(const std::string& name, Writer&& writer) {
    const fs::path path = root_ / name;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::UnreadableFile, "cannot write " + path.string());
    writer(out);
    out.close();
    if (!out) throw Error(Errc::UnreadableFile, "failed writing " + path.string());
    outputs_.insert(name);
  }

  void record(const std::string& name) { outputs_.insert(name); }

  /// manifest.json written through a temporary file and a rename.
  void manifest(const std::string& command, std::uint64_t seed, const config::RunConfig* cfg,
                double seconds) const {
    nlohmann::json m;
    m["command"] = command;
    m["seed"] = seed;
    m["config_digest"] = cfg ? nlohmann::json(config::digest(*cfg)) : nlohmann::json(nullptr);
    m["outputs"] = std::vector<std::string>(outputs_.begin(), outputs_.end());
    m["versions"] = {{"crowdledger", CROWDLEDGER_VERSION},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    m["wall_clock_seconds"] = seconds;
    const fs::path tmp = root_ / "manifest.json.tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << m.dump(2) << '\n';
      if (!out) throw Error(Errc::UnreadableFile, "cannot write manifest");
    }
    fs::rename(tmp, root_ / "manifest.json");
  }

 private:
  fs::path root_;
  std::set<std::string> outputs_;
};

config::RunConfig load_config(const Options& o) {
  config::RunConfig cfg = o.config_path.empty() ? config::parse_config_text("{}")
                                                : config::parse_config(fs::path(o.config_path));
  auto& sc = cfg.pipeline.scenario;
  if (o.seed) sc.seed = *o.seed;
  if (o.alpha) {
    if (!(*o.alpha >= 0.0 && *o.alpha <= 1.0)) throw Error(Errc::ValidationError, "--alpha: outside [0,1]");
    sc.blend_alpha = *o.alpha;
  }
  if (o.runs) {
    if (*o.runs < 1) throw Error(Errc::ValidationError, "--runs: must be at least 1");
    cfg.sweep.runs = *o.runs;
  }
  return cfg;
}

fs::path output_root(const Options& o, const std::string& command, std::uint64_t seed) {
  if (!o.out.empty()) return o.out;
  const char* env = std::getenv("CROWDLEDGER_OUT");
  const fs::path base = env && *env ? fs::path(env) : fs::path("runs");
  return base / (command + "-seed" + std::to_string(seed));
}

void write_config(RunDir& dir, const config::RunConfig& cfg) {
  dir.write("config.json", [&](std::ostream& out) { out << config::to_json(cfg).dump(2) << '\n'; });
}

void write_world(RunDir& dir, const engine::SimulationResult& world) {
  dir.write("events.csv", [&](std::ostream& out) { write_event_csv(out, world.events); });
  dir.write("chain.jsonl", [&](std::ostream& out) { world.chain.export_jsonl(out); });
  dir.write("trajectory.csv", [&](std::ostream& out) { report::write_trajectory_csv(out, world.trajectory); });
  dir.write("reputation.csv", [&](std::ostream& out) { report::write_reputation_csv(out, world); });
  dir.write("settlements.csv", [&](std::ostream& out) { report::write_settlements_csv(out, world); });
}

void write_evaluation(RunDir& dir, const experiment::PipelineResult& r, bool with_train) {
  std::vector<std::pair<std::string, metrics::ClassificationMetrics>> rows;
  if (with_train) rows.emplace_back("train", r.train_metrics);
  rows.emplace_back("test", r.test_metrics);
  rows.emplace_back("crowd_test", r.crowd_metrics);
  dir.write("metrics.csv", [&](std::ostream& out) { report::write_metrics_csv(out, rows); });
  dir.write("detection.csv", [&](std::ostream& out) { report::write_detection_csv(out, r.detection); });
  dir.write("outcomes.csv", [&](std::ostream& out) { report::write_outcomes_csv(out, r.outcomes); });
  if (r.roc_train)
    dir.write("roc_train.csv", [&](std::ostream& out) { report::write_roc_csv(out, *r.roc_train); });
  if (r.roc_test)
    dir.write("roc_test.csv", [&](std::ostream& out) { report::write_roc_csv(out, *r.roc_test); });
}

experiment::TrainedModels load_models(const fs::path& dir) {
  for (const char* name : {"action.json", "action.bin", "story.json", "story.bin"})
    if (!fs::is_regular_file(dir / name))
      throw Error(Errc::MissingArtifacts, "missing checkpoint " + (dir / name).string());
  return {classifiers::ActionClassifier::load(dir / "action"), classifiers::StoryClassifier::load(dir / "story")};
}

engine::StoryScorer scorer_for(experiment::TrainedModels& models) {
  return [&models](std::span<const ActionEvent> events) {
    return classifiers::classify_story(models.action, models.story, events);
  };
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int cmd_simulate(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = load_config(o);
  const auto& sc = cfg.pipeline.scenario;
  RunDir dir(output_root(o, "simulate", sc.seed));
  write_config(dir, cfg);
  std::optional<experiment::TrainedModels> models;
  engine::StoryScorer scorer;
  if (!o.models.empty()) {
    models.emplace(load_models(o.models));
    scorer = scorer_for(*models);
  }
  const auto world = engine::run_simulation(sc, models ? &scorer : nullptr);
  write_world(dir, world);
  dir.manifest("simulate", sc.seed, &cfg, seconds_since(t0));
  std::cout << "simulate: " << world.settlements.size() << " settlements, " << world.events.size()
            << " events -> " << dir.root().string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = load_config(o);
  const auto seed = cfg.pipeline.scenario.seed;
  RunDir dir(output_root(o, "train", seed));
  write_config(dir, cfg);
  std::optional<experiment::TrainedModels> models;
  const auto r = experiment::run_pipeline(experiment::with_seed(cfg.pipeline, seed), &models);
  write_world(dir, r.bootstrap);
  write_evaluation(dir, r, true);
  dir.write("training.json", [&](std::ostream& out) {
    const nlohmann::json j = {{"action", classifiers::to_json(r.action_run)},
                              {"story", classifiers::to_json(r.story_run)}};
    out << j.dump(2) << '\n';
  });
  fs::create_directories(dir.root() / "models");
  models->action.save(dir.root() / "models" / "action");
  models->story.save(dir.root() / "models" / "story");
  for (const char* name : {"models/action.json", "models/action.bin", "models/story.json", "models/story.bin"})
    dir.record(name);
  dir.manifest("train", seed, &cfg, seconds_since(t0));
  std::cout << "train: test accuracy " << r.test_metrics.accuracy << ", F1 " << r.test_metrics.f1 << " -> "
            << dir.root().string() << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  const auto t0 = Clock::now();
  if (o.models.empty()) throw Error(Errc::MissingArtifacts, "evaluate needs --models <dir> with checkpoints");
  auto models = load_models(o.models);
  const auto cfg = load_config(o);
  const auto& sc = cfg.pipeline.scenario;
  RunDir dir(output_root(o, "evaluate", sc.seed));
  write_config(dir, cfg);
  const auto scorer = scorer_for(models);
  auto world = engine::run_simulation(sc, &scorer);
  const auto r = experiment::evaluate_world(std::move(world), models, sc.blend_alpha);
  write_world(dir, r.bootstrap);
  write_evaluation(dir, r, false);
  dir.manifest("evaluate", sc.seed, &cfg, seconds_since(t0));
  std::cout << "evaluate: accuracy " << r.test_metrics.accuracy << ", F1 " << r.test_metrics.f1 << " -> "
            << dir.root().string() << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = load_config(o);
  const auto seed = cfg.pipeline.scenario.seed;
  const auto& spec = cfg.sweep;
  RunDir dir(output_root(o, "sweep", seed));
  write_config(dir, cfg);

  std::vector<experiment::SweepRun> runs;
  if (spec.grid_mode) {
    std::vector<experiment::GridCell> cells;
    for (const auto& c : spec.grid) {
      experiment::GridCell cell{c.label, cfg.pipeline};
      cell.config.scenario.population.percentages = c.percentages;
      cell.config.scenario.n_users = c.n_users;
      cell.config.scenario.n_stories = c.n_stories;
      cell.config.scenario.n_votes = c.n_votes;
      try {
        engine::validate(cell.config.scenario);
      } catch (const Error& e) {
        throw Error(Errc::ValidationError, "sweep.grid " + c.label + ": " + e.what());
      }
      cells.push_back(std::move(cell));
    }
    runs = experiment::run_grid(cells, spec.replicates, seed, o.jobs);
  } else {
    runs = experiment::run_sweep(cfg.pipeline, spec.runs, seed, o.jobs);
  }

  std::vector<report::SweepRow> rows;
  std::map<std::string, std::vector<metrics::RocCurve>> curves;
  std::vector<std::string> cell_order;
  for (const auto& r : runs) {
    rows.push_back({r.index, r.seed, r.cell, r.record});
    if (!curves.contains(r.cell)) cell_order.push_back(r.cell);
    auto& c = curves[r.cell];
    if (r.roc_test) c.push_back(*r.roc_test);
  }
  dir.write("sweep.csv", [&](std::ostream& out) { report::write_sweep_csv(out, rows); });

  dir.write("cells.csv", [&](std::ostream& out) {
    out << "cell,runs,precision,recall,f1,accuracy\n";
    for (const auto& name : cell_order) {
      metrics::ClassificationMetrics mean;
      std::size_t n = 0;
      for (const auto& r : runs) {
        if (r.cell != name) continue;
        mean.precision += r.record.metrics.precision;
        mean.recall += r.record.metrics.recall;
        mean.f1 += r.record.metrics.f1;
        mean.accuracy += r.record.metrics.accuracy;
        ++n;
      }
      const double d = static_cast<double>(n);
      out << name << ',' << n << ',' << report::format_number(mean.precision / d) << ','
          << report::format_number(mean.recall / d) << ',' << report::format_number(mean.f1 / d) << ','
          << report::format_number(mean.accuracy / d) << '\n';
    }
  });

  for (const auto& name : cell_order) {
    const auto& c = curves[name];
    if (c.empty()) continue;
    const std::string file = cell_order.size() == 1 ? "roc_band.csv" : "roc_band_" + name + ".csv";
    dir.write(file, [&](std::ostream& out) { report::write_roc_band_csv(out, experiment::roc_band(c)); });
  }

  std::vector<metrics::RunRecord> records;
  for (const auto& r : runs) records.push_back(r.record);
  try {
    const auto ols = metrics::attack_impact_regression(records);
    dir.write("ols.json", [&](std::ostream& out) {
      nlohmann::json j;
      for (const auto& [name, result] : ols) j[name] = metrics::to_json(result);
      out << j.dump(2) << '\n';
    });
    dir.write("ols.txt", [&](std::ostream& out) {
      for (const auto& name : metrics::kMetricNames) out << metrics::format_ols_table(name, ols.at(name)) << '\n';
    });
  } catch (const Error& e) {
    if (e.code() != Errc::TooFewSamples && e.code() != Errc::Singular && e.code() != Errc::Underdetermined)
      throw;
    std::cerr << "sweep: regression skipped (" << e.what() << ")\n";
  }
  dir.manifest("sweep", seed, &cfg, seconds_since(t0));
  std::cout << "sweep: " << runs.size() << " runs -> " << dir.root().string() << '\n';
  return 0;
}

int cmd_birdwatch(const Options& o) {
  const auto t0 = Clock::now();
  const auto cfg = load_config(o);
  const auto seed = cfg.pipeline.scenario.seed;
  RunDir dir(output_root(o, "birdwatch", seed));
  write_config(dir, cfg);

  fs::path notes_path = o.notes, ratings_path = o.ratings, labels_path = o.labels;
  if (o.synthetic) {
    birdwatch::SyntheticSpec spec;
    spec.seed = seed;
    const auto data = birdwatch::synthesize(spec);
    dir.write("notes.tsv", [&](std::ostream& out) { birdwatch::write_notes(out, data.notes); });
    dir.write("ratings.tsv", [&](std::ostream& out) { birdwatch::write_ratings(out, data.ratings); });
    dir.write("labels.csv", [&](std::ostream& out) {
      out << "tweetId,label\n";
      for (const auto& [tweet, label] : data.labels) out << tweet << ',' << (label > 0 ? "true" : "false") << '\n';
    });
    notes_path = dir.root() / "notes.tsv";
    ratings_path = dir.root() / "ratings.tsv";
    labels_path = dir.root() / "labels.csv";
  } else if (notes_path.empty() || ratings_path.empty() || labels_path.empty()) {
    throw Error(Errc::ValidationError, "birdwatch needs --notes, --ratings and --labels, or --synthetic");
  }

  const auto notes = birdwatch::parse_notes(notes_path);
  const auto ratings = birdwatch::parse_ratings(ratings_path);
  const auto labels = birdwatch::parse_labels(labels_path);
  const auto dataset = birdwatch::to_votes(notes.records, ratings.records);
  dir.write("votes.csv", [&](std::ostream& out) {
    out << "user,story,value,timestamp\n";
    for (const auto& v : dataset.votes) out << v.user << ',' << v.story << ',' << v.value << ',' << v.timestamp << '\n';
  });

  birdwatch::CaseStudyConfig study;
  study.train_fraction = cfg.pipeline.train_fraction;
  study.model = cfg.pipeline.story;
  study.model.seed = Rng::splitmix(seed ^ 0xb2);
  study.training = cfg.pipeline.story_training;
  study.training.seed = Rng::splitmix(seed ^ 0xd4);
  const auto result = birdwatch::run_case_study(dataset, labels, study);

  dir.write("metrics.csv", [&](std::ostream& out) {
    report::write_metrics_csv(out, {{"train", result.train}, {"test", result.test}, {"crowd_test", result.crowd_test}});
  });
  dir.write("case_study.txt", [&](std::ostream& out) { out << birdwatch::format_case_study(result); });
  dir.write("case_study.json", [&](std::ostream& out) {
    nlohmann::json j = {{"notes", notes.records.size()},
                        {"notes_skipped", notes.skipped},
                        {"ratings", ratings.records.size()},
                        {"ratings_skipped", ratings.skipped},
                        {"ratings_contradictory", ratings.contradictory},
                        {"orphan_ratings", dataset.orphan_ratings},
                        {"no_opinion_ratings", dataset.no_opinion_ratings},
                        {"votes", dataset.votes.size()},
                        {"duplicate_fraction", result.duplicate_fraction},
                        {"train_stories", result.train_stories},
                        {"test_stories", result.test_stories}};
    for (const auto& row : result.table)
      j["table"].push_back({{"system", row.system}, {"precision", row.precision}, {"recall", row.recall}, {"f1", row.f1}});
    out << j.dump(2) << '\n';
  });
  dir.manifest("birdwatch", seed, &cfg, seconds_since(t0));
  std::cout << birdwatch::format_case_study(result);
  return 0;
}

int cmd_report(const Options& o) {
  if (o.run_dirs.empty()) throw Error(Errc::MissingArtifacts, "report needs at least one run directory");
  for (const auto& d : o.run_dirs) {
    const auto summary = report::render_run(d);
    std::cout << "report: " << d << " -> " << summary["rendered"].size() << " plots\n";
  }
  return 0;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ParseError:
    case Errc::ValidationError:
    case Errc::MissingArtifacts:
    case Errc::MissingColumn:
    case Errc::UnreadableFile:
    case Errc::NoLabels:
    case Errc::ConfigInvalid:
    case Errc::BadPercentages:
      return kExitInvalid;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdledger: crowd-voting misinformation ledger simulator"};
  app.set_version_flag("--version", std::string(CROWDLEDGER_VERSION));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Scenario config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Seed override");
    sub->add_option("--out", o.out, "Output directory (default $CROWDLEDGER_OUT/<command>-seed<seed>)");
    sub->add_option("--alpha", o.alpha, "Blend weight of the classifier score");
  };

  auto* simulate = app.add_subcommand("simulate", "Run one world and export its event log, chain and trajectories");
  common(simulate);
  simulate->add_option("--models", o.models, "Checkpoint directory; blends classifier scores into settlement");

  auto* train = app.add_subcommand("train", "Bootstrap a world, train both classifiers and score held-out stories");
  common(train);

  auto* evaluate = app.add_subcommand("evaluate", "Run a blended world with trained checkpoints and score it");
  common(evaluate);
  evaluate->add_option("--models", o.models, "Checkpoint directory written by train (<out>/models)");

  auto* sweep = app.add_subcommand("sweep", "Replicated pipeline runs with per-run metrics and OLS summary");
  common(sweep);
  sweep->add_option("--runs", o.runs, "Number of random-mix runs (default 100)");
  sweep->add_option("--jobs", o.jobs, "Parallel runs")->check(CLI::PositiveNumber);

  auto* bird = app.add_subcommand("birdwatch", "Import notes and ratings and run the case study");
  common(bird);
  bird->add_option("--notes", o.notes, "Notes TSV");
  bird->add_option("--ratings", o.ratings, "Ratings TSV");
  bird->add_option("--labels", o.labels, "tweetId,label CSV");
  bird->add_flag("--synthetic", o.synthetic, "Generate a labelled fixture instead of reading files");

  auto* rep = app.add_subcommand("report", "Render SVG plots and summary.json from run directories");
  rep->add_option("runs", o.run_dirs, "Run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*train) return cmd_train(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*sweep) return cmd_sweep(o);
    if (*bird) return cmd_birdwatch(o);
    if (*rep) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
