// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crowdledger::ledger {

using UserId = std::uint64_t;
using StoryId = std::uint64_t;
using Step = std::uint64_t;
using Reputation = std::int64_t;
using Digest = std::array<std::uint8_t, 32>;

enum class TxKind : std::uint8_t { Post = 0, Vote = 1, Settlement = 2 };

/// One ledger event.
///
/// Post carries vote_value +1 (the poster asserts truth). Settlement carries the
/// consensus label in vote_value and the reputation change of `user_id` in
/// `reputation_delta`; a settled story emits one Settlement per rewarded user,
/// poster first. Post and Vote transactions always have a zero delta.
struct Transaction {
  TxKind kind = TxKind::Post;
  UserId user_id = 0;
  StoryId story_id = 0;
  std::int64_t vote_value = 1;
  Step step = 0;
  Reputation reputation_delta = 0;

  bool operator==(const Transaction&) const = default;

  static Transaction post(UserId user, StoryId story, Step step) {
    return {TxKind::Post, user, story, 1, step, 0};
  }
  static Transaction vote(UserId user, StoryId story, int value, Step step) {
    return {TxKind::Vote, user, story, value, step, 0};
  }
};

struct Block {
  std::uint64_t index = 0;
  Digest prev_hash{};
  std::vector<Transaction> txs;
  Digest hash{};

  bool operator==(const Block&) const = default;
};

enum class StoryStatus : std::uint8_t { Open, Settled };

struct VoteEntry {
  UserId user = 0;
  int value = 0;
  Step step = 0;
};

struct StoryRecord {
  StoryId story_id = 0;
  UserId poster_id = 0;
  StoryStatus status = StoryStatus::Open;
  std::optional<int> consensus_label;
  std::optional<Step> settled_at;
  std::vector<VoteEntry> votes;

  bool has_voted(UserId user) const;
};

// Canonical binary encoding (see docs/ledger_format.md).
std::vector<std::uint8_t> serialize_transactions(std::span<const Transaction> txs);
std::vector<std::uint8_t> serialize_block(const Block& block);
/// Inverse of serialize_block. Throws Error(ParseError) on truncated input.
Block deserialize_block(std::span<const std::uint8_t> bytes);

Digest sha256(std::span<const std::uint8_t> bytes);
Digest block_digest(std::uint64_t index, const Digest& prev_hash,
                    std::span<const Transaction> txs);
std::string to_hex(const Digest& digest);
Digest digest_from_hex(const std::string& hex);

Block genesis_block();

/// True iff every block's recomputed hash matches its stored hash, the
/// prev_hash links hold, indices are consecutive and block 0 is the genesis.
bool verify_chain(std::span<const Block> blocks);

/// Reputation per user rebuilt only from Settlement transactions. Users seen in
/// Post or Vote transactions appear with zero if never rewarded.
std::map<UserId, Reputation> replay_reputations(std::span<const Block> blocks);

/// Append-only, hash-chained log with the story/vote/settlement state machine.
///
/// State-changing calls validate against the current state (committed blocks
/// plus pending transactions), apply the change and queue the transaction.
/// commit() seals the queue into a block. Single writer.
class Chain {
 public:
  Chain();

  /// Rebuilds state by replaying the transactions of `blocks` in order. The
  /// blocks are kept verbatim, so a tampered input is reported by verify().
  static Chain from_blocks(std::vector<Block> blocks);

  const std::vector<Block>& blocks() const { return blocks_; }
  const std::map<UserId, Reputation>& accounts() const { return accounts_; }
  const std::map<StoryId, StoryRecord>& stories() const { return stories_; }
  const std::vector<Transaction>& pending() const { return pending_; }
  const StoryRecord& story(StoryId id) const;
  Reputation reputation(UserId user) const;
  const Digest& tip_hash() const { return blocks_.back().hash; }

  Transaction post_story(UserId poster, StoryId story, Step step);
  Transaction submit_vote(UserId user, StoryId story, int value, Step step);
  /// Settles an open story. Emits one Settlement per entry of `deltas` (the
  /// poster first, always present, then ascending user id) and applies them.
  std::vector<Transaction> settle_story(StoryId story, int label,
                                        const std::map<UserId, Reputation>& deltas,
                                        Step step);

  /// Validates and applies `txs`, then seals pending + txs into a new block.
  /// Throws EmptyBatch, or InvalidTransaction with the offending index.
  const Block& append_block(std::span<const Transaction> txs);
  /// Seals the pending queue. Throws EmptyBatch when nothing is pending.
  const Block& commit();

  bool verify() const { return verify_chain(blocks_); }

  void export_jsonl(std::ostream& out) const;
  static Chain import_jsonl(std::istream& in);

 private:
  void apply(const Transaction& tx, std::size_t index);
  void check_step(Step step, std::size_t index) const;
  const Block& seal(std::vector<Transaction> txs);

  std::vector<Block> blocks_;
  std::vector<Transaction> pending_;
  std::map<UserId, Reputation> accounts_;
  std::map<StoryId, StoryRecord> stories_;
  Step last_step_ = 0;
};

}  // namespace crowdledger::ledger
