// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdledger/engine.hpp"
#include "crowdledger/experiment.hpp"
#include "crowdledger/metrics.hpp"

namespace crowdledger::report {

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);
/// Parses text written by format_number; empty fields give nullopt.
std::optional<double> parse_number(const std::string& text);

/// Plain comma-separated table without quoting (no field contains a comma).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header. Throws MissingArtifacts when absent.
  std::size_t column(const std::string& name) const;
};

Table read_csv(std::istream& in);
/// Throws MissingArtifacts when the file cannot be opened.
Table read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Table& table);

/// step, then one column per behaviour type (empty when the type is absent).
void write_trajectory_csv(std::ostream& out, const std::vector<engine::TrajectoryRow>& rows);
/// user,behavior,reputation for every agent.
void write_reputation_csv(std::ostream& out, const engine::SimulationResult& world);
/// story,poster,truth,consensus,crowd_score,classifier_score,final_score,reason,step,votes
void write_settlements_csv(std::ostream& out, const engine::SimulationResult& world);
/// fpr,tpr,threshold
void write_roc_csv(std::ostream& out, const metrics::RocCurve& curve);
/// fpr,mean_tpr,half_width
void write_roc_band_csv(std::ostream& out, const experiment::RocBand& band);
/// split,precision,recall,f1,accuracy
void write_metrics_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, metrics::ClassificationMetrics>>& rows);
/// behavior,detected,total,rate
void write_detection_csv(std::ostream& out,
                         const std::map<population::BehaviorType, experiment::Detection>& detection);
/// story,split,truth,crowd_score,classifier_score,final_score,predicted
void write_outcomes_csv(std::ostream& out, const std::vector<experiment::StoryOutcome>& outcomes);

struct SweepRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string cell;
  metrics::RunRecord record;
};
/// index,seed,cell,<percent per type>,precision,recall,f1,accuracy
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Axes, ticks, legend and one polyline per series. `staircase` joins points
/// with horizontal-then-vertical segments.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          bool staircase = false);

/// One outlined histogram per group over shared bins.
std::string histogram_svg(const std::string& title, const std::string& x_label,
                          const std::map<std::string, std::vector<double>>& groups,
                          std::size_t bins = 20);

/// Renders every known CSV in `dir` (trajectory, reputation, roc*, roc_band*)
/// to an SVG beside it and writes summary.json. Returns the summary. Throws
/// MissingArtifacts when the directory holds none of them.
nlohmann::json render_run(const std::filesystem::path& dir);

}  // namespace crowdledger::report
