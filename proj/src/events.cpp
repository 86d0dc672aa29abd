// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/events.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "crowdledger/error.hpp"

namespace crowdledger {

namespace {

template <class T>
T parse_number(std::string_view field, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw Error(Errc::ParseError, "bad number '" + std::string(field) + "'", line);
  return value;
}

std::vector<std::string_view> split(std::string_view row) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = row.find(',', start);
    fields.push_back(row.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

void write_event_csv(std::ostream& out, const EventLog& log) {
  out << kEventCsvHeader << '\n';
  for (const auto& e : log) {
    out << e.step << ',' << e.user << ',' << e.story << ',' << static_cast<int>(e.type) << ','
        << e.vote << ',';
    if (e.story_truth) out << *e.story_truth;
    out << ',';
    if (e.malicious) out << (*e.malicious ? 1 : 0);
    out << '\n';
  }
}

EventLog read_event_csv(std::istream& in) {
  std::string row;
  if (!std::getline(in, row)) throw Error(Errc::ParseError, "empty event log", 1);
  if (!row.empty() && row.back() == '\r') row.pop_back();
  if (row != kEventCsvHeader) throw Error(Errc::ParseError, "unexpected header '" + row + "'", 1);

  EventLog log;
  std::size_t line = 1;
  while (std::getline(in, row)) {
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    const auto f = split(row);
    if (f.size() != 7) throw Error(Errc::ParseError, "expected 7 fields", line);
    ActionEvent e;
    e.step = parse_number<ledger::Step>(f[0], line);
    e.user = parse_number<ledger::UserId>(f[1], line);
    e.story = parse_number<ledger::StoryId>(f[2], line);
    const int type = parse_number<int>(f[3], line);
    if (type != 0 && type != 1) throw Error(Errc::ParseError, "type must be 0 or 1", line);
    e.type = static_cast<ActionType>(type);
    e.vote = parse_number<int>(f[4], line);
    if (e.vote != 1 && e.vote != -1) throw Error(Errc::ParseError, "vote must be +1 or -1", line);
    if (!f[5].empty()) {
      const int truth = parse_number<int>(f[5], line);
      if (truth != 1 && truth != -1) throw Error(Errc::ParseError, "story_truth must be ±1", line);
      e.story_truth = truth;
    }
    if (!f[6].empty()) {
      const int m = parse_number<int>(f[6], line);
      if (m != 0 && m != 1) throw Error(Errc::ParseError, "malicious must be 0 or 1", line);
      e.malicious = m == 1;
    }
    log.push_back(e);
  }
  return log;
}

}  // namespace crowdledger
