// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "crowdledger/birdwatch.hpp"
#include "crowdledger/error.hpp"

namespace crowdledger::birdwatch {
namespace {

constexpr const char* kNotesHeader = "noteId\ttweetId\tparticipantId\tclassification\tcreatedAtMillis\tsummary\n";
constexpr const char* kRatingsHeader = "noteId\traterParticipantId\tcreatedAtMillis\tagree\tdisagree\n";

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::ParseError;
}

TEST(ParseNotes, WellFormed) {
  std::istringstream in(std::string(kNotesHeader) +
                        "n1\tt1\talice\tNOT_MISLEADING\t100\tok\n"
                        "n2\tt1\tbob\tMISINFORMED_OR_POTENTIALLY_MISLEADING\t101\tbad\n"
                        "n3\tt2\tcarol\tNOT_MISLEADING\t102\t\n");
  const auto r = parse_notes(in);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.skipped, 0u);
  EXPECT_EQ(r.records[1].classification, NoteClass::Misleading);
  EXPECT_EQ(r.records[2].created_at_millis, 102);
}

TEST(ParseNotes, MissingColumn) {
  std::istringstream in("noteId\ttweetId\tparticipantId\tcreatedAtMillis\nn1\tt1\ta\t1\n");
  EXPECT_EQ(error_code([&] { parse_notes(in); }), Errc::MissingColumn);
}

TEST(ParseNotes, SkipsMalformedRow) {
  std::string text = kNotesHeader;
  for (int i = 0; i < 10; ++i) {
    const std::string time = i == 4 ? "yesterday" : std::to_string(1000 + i);
    text += "n" + std::to_string(i) + "\tt" + std::to_string(i % 3) + "\tp" + std::to_string(i) +
            "\tNOT_MISLEADING\t" + time + "\t\n";
  }
  std::istringstream in(text);
  const auto r = parse_notes(in);
  EXPECT_EQ(r.records.size(), 9u);
  EXPECT_EQ(r.skipped, 1u);
}

TEST(ParseRatings, AgreementFlags) {
  std::istringstream in(std::string(kRatingsHeader) +
                        "n1\tr1\t5\t1\t0\n"
                        "n1\tr2\t6\t0\t1\n"
                        "n1\tr3\t7\t0\t0\n"
                        "n1\tr4\t8\t1\t1\n"
                        "n1\tr5\t9\t2\t0\n");
  const auto r = parse_ratings(in);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].agreement, Agreement::Agree);
  EXPECT_EQ(r.records[1].agreement, Agreement::Disagree);
  EXPECT_EQ(r.records[2].agreement, Agreement::None);
  EXPECT_EQ(r.contradictory, 1u);
  EXPECT_EQ(r.skipped, 1u);
}

TEST(ParseFiles, Unreadable) {
  EXPECT_EQ(error_code([] { parse_notes(std::filesystem::path("/nonexistent/notes.tsv")); }),
            Errc::UnreadableFile);
  EXPECT_EQ(error_code([] { parse_ratings(std::filesystem::path("/nonexistent/r.tsv")); }),
            Errc::UnreadableFile);
}

TEST(ToVotes, Mapping) {
  const std::vector<NoteRecord> notes{{"n1", "T", "noter", NoteClass::Misleading, 10},
                                      {"n2", "U", "other", NoteClass::NotMisleading, 11}};
  const std::vector<RatingRecord> ratings{{"n1", "agreer", Agreement::Agree, 12},
                                          {"n2", "disagreer", Agreement::Disagree, 13},
                                          {"n2", "shrug", Agreement::None, 14},
                                          {"ghost", "x", Agreement::Agree, 15}};
  const auto d = to_votes(notes, ratings);
  ASSERT_EQ(d.votes.size(), 4u);
  auto vote = [&](const std::string& user) {
    for (const auto& v : d.votes)
      if (d.users[v.user] == user) return v;
    ADD_FAILURE() << user;
    return ImportedVote{};
  };
  EXPECT_EQ(vote("noter").value, -1);
  EXPECT_EQ(d.stories[vote("noter").story], "T");
  EXPECT_EQ(vote("agreer").value, -1);
  EXPECT_EQ(vote("disagreer").value, -1);
  EXPECT_EQ(d.stories[vote("disagreer").story], "U");
  EXPECT_EQ(vote("other").value, 1);
  EXPECT_EQ(d.orphan_ratings, 1u);
  EXPECT_EQ(d.no_opinion_ratings, 1u);
}

TEST(ToVotes, ReindexingIsBijective) {
  const auto data = synthesize({30, 25, 2, 3, 0.8, 4});
  const auto d = to_votes(data.notes, data.ratings);
  ASSERT_EQ(d.users.size(), d.user_index.size());
  for (std::size_t i = 0; i < d.users.size(); ++i) EXPECT_EQ(d.user_index.at(d.users[i]), i);
  for (std::size_t i = 0; i < d.stories.size(); ++i) EXPECT_EQ(d.story_index.at(d.stories[i]), i);
  for (std::size_t i = 1; i < d.votes.size(); ++i)
    EXPECT_LE(d.votes[i - 1].timestamp, d.votes[i].timestamp);
  EXPECT_EQ(d.votes.size(), data.notes.size() + data.ratings.size());
}

TEST(ToVotes, FlippingNotesFlipsVotes) {
  auto data = synthesize({20, 15, 2, 3, 0.7, 5});
  const auto a = to_votes(data.notes, data.ratings);
  for (auto& n : data.notes)
    n.classification = n.classification == NoteClass::Misleading ? NoteClass::NotMisleading
                                                                 : NoteClass::Misleading;
  const auto b = to_votes(data.notes, data.ratings);
  ASSERT_EQ(a.votes.size(), b.votes.size());
  for (std::size_t i = 0; i < a.votes.size(); ++i) EXPECT_EQ(a.votes[i].value, -b.votes[i].value);
}

ImportedDataset hundred_votes(std::size_t duplicates) {
  ImportedDataset d;
  for (std::size_t i = 0; i < 10; ++i) d.stories.push_back("t" + std::to_string(i));
  for (std::size_t i = 0; i < 100; ++i) d.users.push_back("u" + std::to_string(i));
  for (std::size_t i = 0; i < 100 - duplicates; ++i)
    d.votes.push_back({i, i / 10, i % 2 ? 1 : -1, static_cast<std::int64_t>(i)});
  for (std::size_t k = 0; k < duplicates; ++k) {
    auto copy = d.votes[k * 7];
    copy.timestamp = 1000 + static_cast<std::int64_t>(k);
    d.votes.push_back(copy);
  }
  return d;
}

TEST(Dedup, Fractions) {
  const auto two = dedup(hundred_votes(2));
  EXPECT_EQ(two.removed, 2u);
  EXPECT_DOUBLE_EQ(two.removed_fraction, 0.02);
  EXPECT_EQ(two.dataset.votes.size(), 98u);
  for (const auto& v : two.dataset.votes) EXPECT_LT(v.timestamp, 1000);  // earliest kept

  const auto none = dedup(hundred_votes(0));
  EXPECT_EQ(none.removed_fraction, 0.0);
}

TEST(TemporalSplit, Boundaries) {
  ImportedDataset d;
  for (std::size_t i = 0; i < 100; ++i) d.votes.push_back({i, i, 1, 5});  // one story per vote
  const auto split = temporal_split(d);
  EXPECT_EQ(split.boundary, 80u);
  EXPECT_EQ(split.train.votes.size(), 80u);
  EXPECT_EQ(split.test.votes.size(), 20u);
  // Identical timestamps keep input order.
  for (std::size_t i = 0; i < 80; ++i) EXPECT_EQ(split.train.votes[i].user, i);
  EXPECT_EQ(split.test.votes.front().user, 80u);

  const auto all = temporal_split(d, 1.0);
  EXPECT_TRUE(all.test.votes.empty());
  EXPECT_EQ(all.train.votes.size(), 100u);
}

TEST(TemporalSplit, StraddlingStoryGoesToTest) {
  ImportedDataset d;
  for (std::size_t i = 0; i < 10; ++i) d.votes.push_back({i, i < 7 ? 0u : 1u, 1, static_cast<std::int64_t>(i)});
  d.votes[2].story = 1;  // story 1 now has a vote on the train side
  const auto split = temporal_split(d);
  EXPECT_EQ(split.boundary, 8u);
  EXPECT_EQ(split.straddling_stories, 1u);
  for (const auto& v : split.train.votes) EXPECT_EQ(v.story, 0u);
  EXPECT_EQ(split.test.votes.size(), 4u);
}

TEST(Labels, ParseAndErrors) {
  std::istringstream in("tweetId,label\n100,true\n200,false\n");
  const auto labels = parse_labels(in);
  EXPECT_EQ(labels.at("100"), 1);
  EXPECT_EQ(labels.at("200"), -1);
  std::istringstream bad("tweetId,label\n100,maybe\n");
  EXPECT_EQ(error_code([&] { parse_labels(bad); }), Errc::ParseError);
}

TEST(Synthetic, TsvRoundTrip) {
  const auto data = synthesize({});
  std::stringstream notes, ratings;
  write_notes(notes, data.notes);
  write_ratings(ratings, data.ratings);
  const auto n = parse_notes(notes);
  const auto r = parse_ratings(ratings);
  ASSERT_EQ(n.records.size(), data.notes.size());
  ASSERT_EQ(r.records.size(), data.ratings.size());
  for (std::size_t i = 0; i < data.notes.size(); ++i) {
    EXPECT_EQ(n.records[i].note_id, data.notes[i].note_id);
    EXPECT_EQ(n.records[i].classification, data.notes[i].classification);
    EXPECT_EQ(n.records[i].created_at_millis, data.notes[i].created_at_millis);
  }
  for (std::size_t i = 0; i < data.ratings.size(); ++i)
    EXPECT_EQ(r.records[i].agreement, data.ratings[i].agreement);
}

TEST(CaseStudy, InformativeVotesAreSeparable) {
  const auto data = synthesize({60, 40, 2, 4, 1.0, 3});
  const auto dataset = to_votes(data.notes, data.ratings);
  CaseStudyConfig cfg;
  cfg.model.max_length = 16;
  cfg.training = {6, 8, 0.0, 3e-3, 0};
  const auto result = run_case_study(dataset, data.labels, cfg);
  EXPECT_GE(result.test.f1, 0.95);
  EXPECT_GT(result.train_stories, 0u);
  EXPECT_GT(result.test_stories, 0u);
  EXPECT_NE(format_case_study(result).find("Hawkeye"), std::string::npos);
  EXPECT_EQ(reference_rows().size(), 4u);
}

TEST(CaseStudy, NoLabels) {
  const auto data = synthesize({10, 10, 1, 2, 1.0, 1});
  const auto dataset = to_votes(data.notes, data.ratings);
  EXPECT_EQ(error_code([&] { run_case_study(dataset, {}); }), Errc::NoLabels);
}

}  // namespace
}  // namespace crowdledger::birdwatch
