// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/birdwatch.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>
#include <tuple>

#include "crowdledger/error.hpp"
#include "crowdledger/rng.hpp"

namespace crowdledger::birdwatch {

namespace {

std::vector<std::string_view> split(std::string_view row, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = row.find(sep, start);
    out.push_back(row.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

void chomp(std::string& row) {
  if (!row.empty() && row.back() == '\r') row.pop_back();
}

/// Header lookup: column name → position.
class Header {
 public:
  explicit Header(std::istream& in) {
    if (!std::getline(in, line_)) throw Error(Errc::MissingColumn, "missing header row");
    chomp(line_);
    const auto cols = split(line_, '\t');
    for (std::size_t i = 0; i < cols.size(); ++i) index_.emplace(std::string(cols[i]), i);
    width_ = cols.size();
  }

  std::size_t require(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(Errc::MissingColumn, "missing column '" + name + "'");
    return it->second;
  }

  std::size_t require_any(std::initializer_list<const char*> names) const {
    for (const char* n : names)
      if (auto it = index_.find(n); it != index_.end()) return it->second;
    throw Error(Errc::MissingColumn, "missing column '" + std::string(*names.begin()) + "'");
  }

  std::size_t width() const { return width_; }

 private:
  std::string line_;
  std::map<std::string, std::size_t> index_;
  std::size_t width_ = 0;
};

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::UnreadableFile, "cannot open " + path.string());
  return in;
}

bool parse_class(std::string_view s, NoteClass& out) {
  if (s == "NOT_MISLEADING") {
    out = NoteClass::NotMisleading;
    return true;
  }
  if (s == "MISINFORMED_OR_POTENTIALLY_MISLEADING" || s == "MISLEADING") {
    out = NoteClass::Misleading;
    return true;
  }
  return false;
}

int note_value(NoteClass c) { return c == NoteClass::NotMisleading ? 1 : -1; }

}  // namespace

ParseReport<NoteRecord> parse_notes(std::istream& in) {
  const Header h(in);
  const std::size_t c_note = h.require("noteId");
  const std::size_t c_tweet = h.require("tweetId");
  const std::size_t c_part = h.require("participantId");
  const std::size_t c_class = h.require("classification");
  const std::size_t c_time = h.require("createdAtMillis");

  ParseReport<NoteRecord> report;
  std::string row;
  while (std::getline(in, row)) {
    chomp(row);
    if (row.empty()) continue;
    const auto f = split(row, '\t');
    NoteRecord r;
    if (f.size() != h.width() || f[c_note].empty() || f[c_tweet].empty() || f[c_part].empty() ||
        !parse_class(f[c_class], r.classification) || !parse_int(f[c_time], r.created_at_millis)) {
      ++report.skipped;
      continue;
    }
    r.note_id = f[c_note];
    r.tweet_id = f[c_tweet];
    r.participant_id = f[c_part];
    report.records.push_back(std::move(r));
  }
  return report;
}

ParseReport<RatingRecord> parse_ratings(std::istream& in) {
  const Header h(in);
  const std::size_t c_note = h.require("noteId");
  const std::size_t c_rater = h.require_any({"raterParticipantId", "participantId"});
  const std::size_t c_time = h.require("createdAtMillis");
  const std::size_t c_agree = h.require("agree");
  const std::size_t c_disagree = h.require("disagree");

  ParseReport<RatingRecord> report;
  std::string row;
  while (std::getline(in, row)) {
    chomp(row);
    if (row.empty()) continue;
    const auto f = split(row, '\t');
    RatingRecord r;
    std::int64_t agree = 0, disagree = 0;
    if (f.size() != h.width() || f[c_note].empty() || f[c_rater].empty() ||
        !parse_int(f[c_time], r.created_at_millis) || !parse_int(f[c_agree], agree) ||
        !parse_int(f[c_disagree], disagree) || agree < 0 || agree > 1 || disagree < 0 ||
        disagree > 1) {
      ++report.skipped;
      continue;
    }
    if (agree == 1 && disagree == 1) {
      ++report.contradictory;
      continue;
    }
    r.note_id = f[c_note];
    r.rater_participant_id = f[c_rater];
    r.agreement = agree ? Agreement::Agree : disagree ? Agreement::Disagree : Agreement::None;
    report.records.push_back(std::move(r));
  }
  return report;
}

ParseReport<NoteRecord> parse_notes(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_notes(in);
}

ParseReport<RatingRecord> parse_ratings(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_ratings(in);
}

void write_notes(std::ostream& out, const std::vector<NoteRecord>& notes) {
  out << "noteId\tparticipantId\tcreatedAtMillis\ttweetId\tclassification\n";
  for (const auto& n : notes)
    out << n.note_id << '\t' << n.participant_id << '\t' << n.created_at_millis << '\t'
        << n.tweet_id << '\t'
        << (n.classification == NoteClass::NotMisleading ? "NOT_MISLEADING"
                                                         : "MISINFORMED_OR_POTENTIALLY_MISLEADING")
        << '\n';
}

void write_ratings(std::ostream& out, const std::vector<RatingRecord>& ratings) {
  out << "noteId\traterParticipantId\tcreatedAtMillis\tagree\tdisagree\n";
  for (const auto& r : ratings)
    out << r.note_id << '\t' << r.rater_participant_id << '\t' << r.created_at_millis << '\t'
        << (r.agreement == Agreement::Agree ? 1 : 0) << '\t'
        << (r.agreement == Agreement::Disagree ? 1 : 0) << '\n';
}

ImportedDataset to_votes(const std::vector<NoteRecord>& notes,
                         const std::vector<RatingRecord>& ratings) {
  struct Raw {
    const std::string* user;
    const std::string* tweet;
    int value;
    std::int64_t time;
  };
  std::map<std::string_view, const NoteRecord*> by_id;
  for (const auto& n : notes) by_id.emplace(n.note_id, &n);

  ImportedDataset ds;
  std::vector<Raw> raw;
  raw.reserve(notes.size() + ratings.size());
  for (const auto& n : notes)
    raw.push_back({&n.participant_id, &n.tweet_id, note_value(n.classification), n.created_at_millis});
  for (const auto& r : ratings) {
    auto it = by_id.find(r.note_id);
    if (it == by_id.end()) {
      ++ds.orphan_ratings;
      continue;
    }
    if (r.agreement == Agreement::None) {
      ++ds.no_opinion_ratings;
      continue;
    }
    const int base = note_value(it->second->classification);
    raw.push_back({&r.rater_participant_id, &it->second->tweet_id,
                   r.agreement == Agreement::Agree ? base : -base, r.created_at_millis});
  }
  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.time < b.time; });

  for (const auto& r : raw) {
    auto [u, new_user] = ds.user_index.try_emplace(*r.user, ds.users.size());
    if (new_user) ds.users.push_back(*r.user);
    auto [s, new_story] = ds.story_index.try_emplace(*r.tweet, ds.stories.size());
    if (new_story) ds.stories.push_back(*r.tweet);
    ds.votes.push_back({u->second, s->second, r.value, r.time});
  }
  return ds;
}

DedupResult dedup(const ImportedDataset& dataset) {
  DedupResult out;
  out.dataset = dataset;
  out.dataset.votes.clear();
  std::set<std::tuple<ledger::UserId, ledger::StoryId, int>> seen;
  for (const auto& v : dataset.votes) {
    if (seen.emplace(v.user, v.story, v.value).second) out.dataset.votes.push_back(v);
    else ++out.removed;
  }
  out.removed_fraction = dataset.votes.empty() ? 0.0
                                               : static_cast<double>(out.removed) /
                                                     static_cast<double>(dataset.votes.size());
  return out;
}

TemporalSplit temporal_split(const ImportedDataset& dataset, double train_fraction) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
    throw Error(Errc::ValidationError, "train_fraction outside [0,1]");
  TemporalSplit out;
  const std::size_t n = dataset.votes.size();
  out.boundary = std::min(n, static_cast<std::size_t>(train_fraction * static_cast<double>(n) + 1e-9));
  std::set<ledger::StoryId> train_side, test_side;
  for (std::size_t i = 0; i < n; ++i)
    (i < out.boundary ? train_side : test_side).insert(dataset.votes[i].story);
  for (auto s : train_side) out.straddling_stories += test_side.contains(s);

  out.train = dataset;
  out.test = dataset;
  out.train.votes.clear();
  out.test.votes.clear();
  for (const auto& v : dataset.votes)
    (test_side.contains(v.story) ? out.test : out.train).votes.push_back(v);
  return out;
}

std::map<std::string, int> parse_labels(std::istream& in) {
  std::map<std::string, int> labels;
  std::string row;
  std::size_t line = 0;
  while (std::getline(in, row)) {
    ++line;
    chomp(row);
    if (row.empty()) continue;
    const auto f = split(row, ',');
    if (line == 1 && f.size() == 2 && f[0] == "tweetId") continue;
    if (f.size() != 2 || f[0].empty()) throw Error(Errc::ParseError, "expected tweetId,label", line);
    if (f[1] == "true") labels[std::string(f[0])] = 1;
    else if (f[1] == "false") labels[std::string(f[0])] = -1;
    else throw Error(Errc::ParseError, "label must be true or false", line);
  }
  return labels;
}

std::map<std::string, int> parse_labels(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_labels(in);
}

EventLog to_event_log(const ImportedDataset& ds, const std::map<std::string, int>& labels) {
  EventLog log;
  log.reserve(ds.votes.size());
  for (std::size_t i = 0; i < ds.votes.size(); ++i) {
    const auto& v = ds.votes[i];
    ActionEvent e{i, v.user, v.story, ActionType::Vote, v.value, std::nullopt, std::nullopt};
    if (auto it = labels.find(ds.stories[v.story]); it != labels.end()) e.story_truth = it->second;
    log.push_back(e);
  }
  return log;
}

std::vector<CaseStudyRow> reference_rows() {
  return {{"Hawkeye (supervised)", 0.85, 0.74, 0.76},
          {"Hawkeye (unsupervised)", 0.79, 0.78, 0.78},
          {"Reference (train)", 0.85, 0.77, 0.78},
          {"Reference (test)", 0.85, 0.75, 0.77}};
}

namespace {

std::vector<classifiers::LabeledSequence> labelled_sequences(
    const ImportedDataset& ds, const std::map<std::string, int>& labels) {
  std::map<ledger::StoryId, classifiers::LabeledSequence> by_story;
  for (const auto& v : ds.votes) {
    auto it = labels.find(ds.stories[v.story]);
    if (it == labels.end()) continue;
    auto& seq = by_story[v.story];
    seq.label = it->second;
    seq.scores.push_back(static_cast<double>(v.value));
  }
  std::vector<classifiers::LabeledSequence> out;
  for (auto& [id, seq] : by_story) out.push_back(std::move(seq));
  return out;
}

metrics::ClassificationMetrics score(classifiers::StoryClassifier& model,
                                     const std::vector<classifiers::LabeledSequence>& data) {
  std::vector<int> predicted, actual;
  for (const auto& s : data) {
    predicted.push_back(model.classify(s.scores) >= 0.0 ? 1 : -1);
    actual.push_back(s.label);
  }
  return metrics::classification_metrics(metrics::confusion(predicted, actual));
}

}  // namespace

CaseStudyResult run_case_study(const ImportedDataset& dataset,
                               const std::map<std::string, int>& labels,
                               const CaseStudyConfig& config) {
  std::size_t labelled = 0;
  for (const auto& s : dataset.stories) labelled += labels.contains(s);
  if (labelled == 0) throw Error(Errc::NoLabels, "no tweet in the dataset has a label");

  CaseStudyResult result;
  const auto clean = dedup(dataset);
  result.duplicate_fraction = clean.removed_fraction;
  const auto split = temporal_split(clean.dataset, config.train_fraction);
  const auto train = labelled_sequences(split.train, labels);
  const auto test = labelled_sequences(split.test, labels);
  result.train_stories = train.size();
  result.test_stories = test.size();
  if (test.empty()) throw Error(Errc::InsufficientData, "no labelled tweets on the test side");

  auto trained = classifiers::train_story_classifier(train, config.model, config.training);
  result.train = score(trained.model, train);
  result.test = score(trained.model, test);

  std::vector<int> crowd, actual;
  for (const auto& s : test) {
    double sum = 0.0;
    for (double v : s.scores) sum += v;
    crowd.push_back(sum >= 0.0 ? 1 : -1);
    actual.push_back(s.label);
  }
  result.crowd_test = metrics::classification_metrics(metrics::confusion(crowd, actual));

  result.table = reference_rows();
  result.table.push_back({"crowdledger (train)", result.train.precision, result.train.recall,
                          result.train.f1});
  result.table.push_back(
      {"crowdledger (test)", result.test.precision, result.test.recall, result.test.f1});
  result.table.push_back({"crowd majority (test)", result.crowd_test.precision,
                          result.crowd_test.recall, result.crowd_test.f1});
  return result;
}

std::string format_case_study(const CaseStudyResult& result) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s\n", "System", "Precision", "Recall", "F1");
  out += buf;
  for (const auto& r : result.table) {
    std::snprintf(buf, sizeof buf, "%-24s %9.2f %9.2f %9.2f\n", r.system.c_str(), r.precision,
                  r.recall, r.f1);
    out += buf;
  }
  return out;
}

SyntheticData synthesize(const SyntheticSpec& spec) {
  if (spec.tweets == 0 || spec.participants < 2)
    throw Error(Errc::ConfigInvalid, "synthetic data needs tweets and two participants");
  Rng rng(spec.seed);
  SyntheticData data;
  std::size_t note_counter = 0;
  auto participant = [&](std::size_t i) { return "p" + std::to_string(i); };
  for (std::size_t t = 0; t < spec.tweets; ++t) {
    const std::string tweet = std::to_string(1'000'000 + t);
    const int truth = rng.bernoulli(0.5) ? 1 : -1;
    data.labels[tweet] = truth;
    const std::int64_t base = static_cast<std::int64_t>(t) * 100'000;
    std::int64_t clock = base;
    for (std::size_t k = 0; k < spec.notes_per_tweet; ++k) {
      const int opinion = rng.bernoulli(spec.informativeness) ? truth : -truth;
      NoteRecord note{"n" + std::to_string(note_counter++), tweet,
                      participant(rng.index(spec.participants)),
                      opinion == 1 ? NoteClass::NotMisleading : NoteClass::Misleading, ++clock};
      data.notes.push_back(note);
      for (std::size_t r = 0; r < spec.ratings_per_note; ++r) {
        std::string rater = participant(rng.index(spec.participants));
        if (rater == note.participant_id) rater = participant((rng.index(spec.participants - 1) + 1 +
                                                               std::stoul(note.participant_id.substr(1))) %
                                                              spec.participants);
        const int view = rng.bernoulli(spec.informativeness) ? truth : -truth;
        data.ratings.push_back({note.note_id, rater,
                                view == opinion ? Agreement::Agree : Agreement::Disagree, ++clock});
      }
    }
  }
  return data;
}

}  // namespace crowdledger::birdwatch
