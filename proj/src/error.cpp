// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/error.hpp"

namespace crowdledger {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::InvalidTransaction: return "InvalidTransaction";
    case Errc::SelfVote: return "SelfVote";
    case Errc::DuplicateVote: return "DuplicateVote";
    case Errc::StorySettled: return "StorySettled";
    case Errc::UnknownStory: return "UnknownStory";
    case Errc::AlreadySettled: return "AlreadySettled";
    case Errc::EmptyCounts: return "EmptyCounts";
    case Errc::NumericalOverflow: return "NumericalOverflow";
    case Errc::BadHorizon: return "BadHorizon";
    case Errc::TooShort: return "TooShort";
    case Errc::BadPercentages: return "BadPercentages";
    case Errc::SelfVoteRequest: return "SelfVoteRequest";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::NoVotes: return "NoVotes";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NoForwardCache: return "NoForwardCache";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::IdOutOfRange: return "IdOutOfRange";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::OneClassOnly: return "OneClassOnly";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::Singular: return "Singular";
    case Errc::Underdetermined: return "Underdetermined";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::UnreadableFile: return "UnreadableFile";
    case Errc::NoLabels: return "NoLabels";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::MissingArtifacts: return "MissingArtifacts";
  }
  return "Unknown";
}

}  // namespace crowdledger
