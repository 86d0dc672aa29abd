// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "crowdledger/classifiers.hpp"
#include "crowdledger/events.hpp"
#include "crowdledger/metrics.hpp"

namespace crowdledger::birdwatch {

enum class NoteClass : std::uint8_t { NotMisleading, Misleading };
enum class Agreement : std::uint8_t { Agree, Disagree, None };

struct NoteRecord {
  std::string note_id;
  std::string tweet_id;
  std::string participant_id;
  NoteClass classification = NoteClass::NotMisleading;
  std::int64_t created_at_millis = 0;
};

struct RatingRecord {
  std::string note_id;
  std::string rater_participant_id;
  Agreement agreement = Agreement::None;
  std::int64_t created_at_millis = 0;
};

template <class Record>
struct ParseReport {
  std::vector<Record> records;
  std::size_t skipped = 0;        // malformed rows
  std::size_t contradictory = 0;  // ratings with both agree and disagree set
};

/// Tab-separated with a header row. Notes need noteId, tweetId, participantId,
/// classification and createdAtMillis; ratings need noteId, raterParticipantId
/// (or participantId), createdAtMillis, agree and disagree. Extra columns are
/// ignored. Throws MissingColumn.
ParseReport<NoteRecord> parse_notes(std::istream& in);
ParseReport<RatingRecord> parse_ratings(std::istream& in);
/// Throw UnreadableFile when the path cannot be opened.
ParseReport<NoteRecord> parse_notes(const std::filesystem::path& path);
ParseReport<RatingRecord> parse_ratings(const std::filesystem::path& path);

void write_notes(std::ostream& out, const std::vector<NoteRecord>& notes);
void write_ratings(std::ostream& out, const std::vector<RatingRecord>& ratings);

struct ImportedVote {
  ledger::UserId user = 0;
  ledger::StoryId story = 0;
  int value = 1;
  std::int64_t timestamp = 0;

  bool operator==(const ImportedVote&) const = default;
};

/// Participants and tweets re-indexed densely from 0 in order of first
/// appearance in the time-ordered vote stream.
struct ImportedDataset {
  std::vector<std::string> users;
  std::vector<std::string> stories;
  std::map<std::string, ledger::UserId> user_index;
  std::map<std::string, ledger::StoryId> story_index;
  std::vector<ImportedVote> votes;
  std::size_t orphan_ratings = 0;
  std::size_t no_opinion_ratings = 0;
};

/// Notes vote +1 (not misleading) or −1 (misleading) on their tweet. Agreeing
/// ratings copy the note's value, disagreeing ratings negate it, ratings
/// without an opinion are dropped. Ratings on unknown notes are counted as
/// orphans and dropped. Votes are stably sorted by timestamp.
ImportedDataset to_votes(const std::vector<NoteRecord>& notes,
                         const std::vector<RatingRecord>& ratings);

struct DedupResult {
  ImportedDataset dataset;
  std::size_t removed = 0;
  double removed_fraction = 0.0;
};

/// Drops repeated (user, story, value) rows, keeping the earliest.
DedupResult dedup(const ImportedDataset& dataset);

struct TemporalSplit {
  ImportedDataset train;
  ImportedDataset test;
  std::size_t boundary = 0;            // first vote index on the test side
  std::size_t straddling_stories = 0;  // stories moved wholly to test
};

/// Splits at vote index ⌊train_fraction·n⌋. A story with votes on both sides
/// is assigned to the test side.
TemporalSplit temporal_split(const ImportedDataset& dataset, double train_fraction = 0.8);

/// `tweetId,label` CSV with label ∈ {true, false}; returns tweet → ±1.
std::map<std::string, int> parse_labels(std::istream& in);
std::map<std::string, int> parse_labels(const std::filesystem::path& path);

/// Votes as an event log (step = position, malicious left empty).
EventLog to_event_log(const ImportedDataset& dataset, const std::map<std::string, int>& labels);

struct CaseStudyConfig {
  double train_fraction = 0.8;
  classifiers::StoryClassifierConfig model;
  classifiers::TrainingConfig training;
};

struct CaseStudyRow {
  std::string system;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct CaseStudyResult {
  metrics::ClassificationMetrics train;
  metrics::ClassificationMetrics test;
  metrics::ClassificationMetrics crowd_test;
  std::size_t train_stories = 0;
  std::size_t test_stories = 0;
  double duplicate_fraction = 0.0;
  std::vector<CaseStudyRow> table;
};

/// Published comparison rows (precision, recall, F1).
std::vector<CaseStudyRow> reference_rows();

/// Dedups, splits temporally, trains the story classifier on the raw vote
/// sequences of labelled training tweets and scores both portions. The
/// positive class is "not misleading" (+1). Throws NoLabels when no tweet in
/// the dataset has a label.
CaseStudyResult run_case_study(const ImportedDataset& dataset,
                               const std::map<std::string, int>& labels,
                               const CaseStudyConfig& config = {});

std::string format_case_study(const CaseStudyResult& result);

struct SyntheticSpec {
  std::size_t tweets = 60;
  std::size_t participants = 40;
  std::size_t notes_per_tweet = 2;
  std::size_t ratings_per_note = 4;
  /// Probability that a participant's opinion matches the tweet's truth.
  double informativeness = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  std::vector<NoteRecord> notes;
  std::vector<RatingRecord> ratings;
  std::map<std::string, int> labels;
};

/// Birdwatch-shaped fixture with known labels.
SyntheticData synthesize(const SyntheticSpec& spec);

}  // namespace crowdledger::birdwatch
