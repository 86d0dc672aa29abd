// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "crowdledger/ledger.hpp"

namespace crowdledger {

enum class ActionType : int { Post = 0, Vote = 1 };

/// One (user, story, type, vote) quadruple with its logical step and the
/// simulation's ground-truth annotations.
struct ActionEvent {
  ledger::Step step = 0;
  ledger::UserId user = 0;
  ledger::StoryId story = 0;
  ActionType type = ActionType::Vote;
  int vote = 1;
  std::optional<int> story_truth;
  std::optional<bool> malicious;

  bool operator==(const ActionEvent&) const = default;
};

using EventLog = std::vector<ActionEvent>;

inline constexpr const char* kEventCsvHeader = "step,user,story,type,vote,story_truth,malicious";

/// CSV with kEventCsvHeader; missing annotations are empty fields.
void write_event_csv(std::ostream& out, const EventLog& log);
/// Throws Error(ParseError) with the 1-based line number in index().
EventLog read_event_csv(std::istream& in);

}  // namespace crowdledger
