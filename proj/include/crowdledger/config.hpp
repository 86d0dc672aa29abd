// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdledger/experiment.hpp"
#include "crowdledger/population.hpp"

namespace crowdledger::config {

/// One grid cell: a population mix at a users/stories/votes scale.
struct SweepCell {
  std::string label;
  std::map<population::BehaviorType, double> percentages;
  std::size_t n_users = 100;
  std::size_t n_stories = 200;
  std::size_t n_votes = 1000;
};

/// Either a random desk sweep (`runs` mixes drawn with normal in
/// [normal_min, normal_max] and every other category ≥ min_share) or, when
/// `grid` is given, `replicates` runs of every cell.
struct SweepSpec {
  std::size_t runs = 100;
  int normal_min = 30;
  int normal_max = 70;
  int min_share = 5;
  bool grid_mode = false;
  std::vector<SweepCell> grid;
  std::size_t replicates = 5;
};

struct RunConfig {
  experiment::PipelineConfig pipeline;
  SweepSpec sweep;
};

/// Strict parse with defaults filled. Throws ParseError for malformed JSON or
/// an unreadable file, ValidationError naming the field for bad or unknown
/// keys.
RunConfig parse_config(const nlohmann::json& document);
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical form: every field present, keys sorted. parse_config of the
/// result reproduces the same config.
nlohmann::json to_json(const RunConfig& config);

/// SHA-256 (hex) of the compact canonical serialization.
std::string digest(const RunConfig& config);

/// Config key of a behaviour type, e.g. "orch_slander".
std::string_view percentage_key(population::BehaviorType type);

}  // namespace crowdledger::config
