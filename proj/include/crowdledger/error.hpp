// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdledger {

enum class Errc {
  // ledger
  EmptyBatch,
  InvalidTransaction,
  SelfVote,
  DuplicateVote,
  StorySettled,
  UnknownStory,
  AlreadySettled,
  // dynamics
  EmptyCounts,
  NumericalOverflow,
  BadHorizon,
  TooShort,
  // population
  BadPercentages,
  SelfVoteRequest,
  // engine
  ConfigInvalid,
  NoVotes,
  // neural
  ShapeMismatch,
  NoForwardCache,
  NonFiniteLoss,
  // classifiers
  IdOutOfRange,
  InsufficientData,
  // metrics
  OneClassOnly,
  TooFewSamples,
  Singular,
  Underdetermined,
  // birdwatch
  MissingColumn,
  UnreadableFile,
  NoLabels,
  // cli
  ParseError,
  ValidationError,
  MissingArtifacts,
};

std::string_view to_string(Errc code) noexcept;

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-checkable code. `index` is set where an offending element exists
/// (e.g. the transaction position for InvalidTransaction).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::size_t index = npos)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        index_(index) {}

  Errc code() const noexcept { return code_; }
  std::size_t index() const noexcept { return index_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  Errc code_;
  std::size_t index_;
};

}  // namespace crowdledger
