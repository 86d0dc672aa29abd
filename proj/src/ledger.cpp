// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/ledger.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "crowdledger/error.hpp"

namespace crowdledger::ledger {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw Error(Errc::ParseError, "truncated block", pos);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  pos += 8;
  return v;
}

void put_tx(std::vector<std::uint8_t>& out, const Transaction& tx) {
  out.push_back(static_cast<std::uint8_t>(tx.kind));
  put_u64(out, tx.user_id);
  put_u64(out, tx.story_id);
  put_u64(out, static_cast<std::uint64_t>(tx.vote_value));
  put_u64(out, tx.step);
  put_u64(out, static_cast<std::uint64_t>(tx.reputation_delta));
}

const char* kind_name(TxKind kind) {
  switch (kind) {
    case TxKind::Post: return "Post";
    case TxKind::Vote: return "Vote";
    case TxKind::Settlement: return "Settlement";
  }
  return "Unknown";
}

TxKind kind_from_name(const std::string& name) {
  if (name == "Post") return TxKind::Post;
  if (name == "Vote") return TxKind::Vote;
  if (name == "Settlement") return TxKind::Settlement;
  throw Error(Errc::ParseError, "unknown transaction kind '" + name + "'");
}

}  // namespace

bool StoryRecord::has_voted(UserId user) const {
  return std::any_of(votes.begin(), votes.end(),
                     [user](const VoteEntry& v) { return v.user == user; });
}

std::vector<std::uint8_t> serialize_transactions(std::span<const Transaction> txs) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + txs.size() * 41);
  put_u64(out, txs.size());
  for (const auto& tx : txs) put_tx(out, tx);
  return out;
}

std::vector<std::uint8_t> serialize_block(const Block& block) {
  std::vector<std::uint8_t> out;
  put_u64(out, block.index);
  out.insert(out.end(), block.prev_hash.begin(), block.prev_hash.end());
  auto body = serialize_transactions(block.txs);
  out.insert(out.end(), body.begin(), body.end());
  out.insert(out.end(), block.hash.begin(), block.hash.end());
  return out;
}

Block deserialize_block(std::span<const std::uint8_t> bytes) {
  Block block;
  std::size_t pos = 0;
  block.index = get_u64(bytes, pos);
  if (pos + 32 > bytes.size()) throw Error(Errc::ParseError, "truncated block", pos);
  std::copy_n(bytes.begin() + pos, 32, block.prev_hash.begin());
  pos += 32;
  const std::uint64_t count = get_u64(bytes, pos);
  if (count > (bytes.size() - pos) / 41)
    throw Error(Errc::ParseError, "transaction count exceeds payload", pos);
  block.txs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Transaction tx;
    if (pos >= bytes.size()) throw Error(Errc::ParseError, "truncated block", pos);
    tx.kind = static_cast<TxKind>(bytes[pos++]);
    tx.user_id = get_u64(bytes, pos);
    tx.story_id = get_u64(bytes, pos);
    tx.vote_value = static_cast<std::int64_t>(get_u64(bytes, pos));
    tx.step = get_u64(bytes, pos);
    tx.reputation_delta = static_cast<std::int64_t>(get_u64(bytes, pos));
    block.txs.push_back(tx);
  }
  if (pos + 32 != bytes.size()) throw Error(Errc::ParseError, "bad block length", pos);
  std::copy_n(bytes.begin() + pos, 32, block.hash.begin());
  return block;
}

Digest sha256(std::span<const std::uint8_t> bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("SHA-256 evaluation failed");
  }
  return out;
}

Digest block_digest(std::uint64_t index, const Digest& prev_hash,
                    std::span<const Transaction> txs) {
  std::vector<std::uint8_t> buf;
  put_u64(buf, index);
  buf.insert(buf.end(), prev_hash.begin(), prev_hash.end());
  auto body = serialize_transactions(txs);
  buf.insert(buf.end(), body.begin(), body.end());
  return sha256(buf);
}

std::string to_hex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : digest) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

Digest digest_from_hex(const std::string& hex) {
  if (hex.size() != 64) throw Error(Errc::ParseError, "digest must be 64 hex characters");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error(Errc::ParseError, std::string("bad hex digit '") + c + "'");
  };
  Digest d{};
  for (std::size_t i = 0; i < 32; ++i)
    d[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return d;
}

Block genesis_block() {
  Block g;
  g.hash = block_digest(0, g.prev_hash, g.txs);
  return g;
}

bool verify_chain(std::span<const Block> blocks) {
  if (blocks.empty()) return false;
  const Block& g = blocks.front();
  if (g.index != 0 || !g.txs.empty() || g.prev_hash != Digest{}) return false;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.index != i) return false;
    if (i > 0 && b.prev_hash != blocks[i - 1].hash) return false;
    if (block_digest(b.index, b.prev_hash, b.txs) != b.hash) return false;
  }
  return true;
}

std::map<UserId, Reputation> replay_reputations(std::span<const Block> blocks) {
  std::map<UserId, Reputation> rep;
  for (const auto& block : blocks) {
    for (const auto& tx : block.txs) {
      rep[tx.user_id] += tx.kind == TxKind::Settlement ? tx.reputation_delta : 0;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

Chain::Chain() { blocks_.push_back(genesis_block()); }

Chain Chain::from_blocks(std::vector<Block> blocks) {
  Chain chain;
  chain.blocks_.clear();
  std::size_t index = 0;
  for (const auto& block : blocks) {
    for (const auto& tx : block.txs) chain.apply(tx, index++);
  }
  chain.blocks_ = std::move(blocks);
  if (chain.blocks_.empty()) chain.blocks_.push_back(genesis_block());
  return chain;
}

const StoryRecord& Chain::story(StoryId id) const {
  auto it = stories_.find(id);
  if (it == stories_.end()) throw Error(Errc::UnknownStory, "story " + std::to_string(id));
  return it->second;
}

Reputation Chain::reputation(UserId user) const {
  auto it = accounts_.find(user);
  return it == accounts_.end() ? 0 : it->second;
}

void Chain::check_step(Step step, std::size_t index) const {
  if (step < last_step_)
    throw Error(Errc::InvalidTransaction, "step goes backwards", index);
}

// Validates one transaction against the current state and applies it. Errors
// carry the specific code; append_block rewraps them as InvalidTransaction.
void Chain::apply(const Transaction& tx, std::size_t index) {
  if (tx.vote_value != 1 && tx.vote_value != -1)
    throw Error(Errc::InvalidTransaction, "vote_value must be +1 or -1", index);
  check_step(tx.step, index);
  switch (tx.kind) {
    case TxKind::Post: {
      if (tx.vote_value != 1 || tx.reputation_delta != 0)
        throw Error(Errc::InvalidTransaction, "malformed post", index);
      if (stories_.contains(tx.story_id))
        throw Error(Errc::InvalidTransaction, "story id already posted", index);
      StoryRecord rec;
      rec.story_id = tx.story_id;
      rec.poster_id = tx.user_id;
      stories_.emplace(tx.story_id, std::move(rec));
      accounts_.try_emplace(tx.user_id, 0);
      break;
    }
    case TxKind::Vote: {
      if (tx.reputation_delta != 0)
        throw Error(Errc::InvalidTransaction, "vote carries a delta", index);
      auto it = stories_.find(tx.story_id);
      if (it == stories_.end())
        throw Error(Errc::UnknownStory, "story " + std::to_string(tx.story_id), index);
      auto& rec = it->second;
      if (rec.status == StoryStatus::Settled)
        throw Error(Errc::StorySettled, "story " + std::to_string(tx.story_id), index);
      if (rec.poster_id == tx.user_id)
        throw Error(Errc::SelfVote, "user " + std::to_string(tx.user_id), index);
      if (rec.has_voted(tx.user_id))
        throw Error(Errc::DuplicateVote, "user " + std::to_string(tx.user_id), index);
      rec.votes.push_back({tx.user_id, static_cast<int>(tx.vote_value), tx.step});
      accounts_.try_emplace(tx.user_id, 0);
      break;
    }
    case TxKind::Settlement: {
      auto it = stories_.find(tx.story_id);
      if (it == stories_.end())
        throw Error(Errc::UnknownStory, "story " + std::to_string(tx.story_id), index);
      auto& rec = it->second;
      if (rec.status == StoryStatus::Open) {
        if (tx.user_id != rec.poster_id)
          throw Error(Errc::InvalidTransaction, "settlement must start with the poster", index);
        rec.status = StoryStatus::Settled;
        rec.consensus_label = static_cast<int>(tx.vote_value);
        rec.settled_at = tx.step;
      } else if (rec.settled_at != tx.step || rec.consensus_label != tx.vote_value ||
                 tx.user_id == rec.poster_id) {
        // Later recipients of the same settlement share its step and label.
        throw Error(Errc::AlreadySettled, "story " + std::to_string(tx.story_id), index);
      }
      accounts_[tx.user_id] += tx.reputation_delta;
      break;
    }
    default:
      throw Error(Errc::InvalidTransaction, "unknown transaction kind", index);
  }
  last_step_ = tx.step;
}

Transaction Chain::post_story(UserId poster, StoryId story, Step step) {
  auto tx = Transaction::post(poster, story, step);
  apply(tx, pending_.size());
  pending_.push_back(tx);
  return tx;
}

Transaction Chain::submit_vote(UserId user, StoryId story, int value, Step step) {
  auto tx = Transaction::vote(user, story, value, step);
  apply(tx, pending_.size());
  pending_.push_back(tx);
  return tx;
}

std::vector<Transaction> Chain::settle_story(StoryId story, int label,
                                             const std::map<UserId, Reputation>& deltas,
                                             Step step) {
  const auto& rec = this->story(story);
  if (rec.status == StoryStatus::Settled)
    throw Error(Errc::AlreadySettled, "story " + std::to_string(story));
  if (label != 1 && label != -1)
    throw Error(Errc::InvalidTransaction, "label must be +1 or -1");
  check_step(step, pending_.size());

  std::vector<Transaction> txs;
  const UserId poster = rec.poster_id;
  auto poster_it = deltas.find(poster);
  txs.push_back({TxKind::Settlement, poster, story, label, step,
                 poster_it == deltas.end() ? 0 : poster_it->second});
  for (const auto& [user, delta] : deltas) {
    if (user != poster) txs.push_back({TxKind::Settlement, user, story, label, step, delta});
  }
  for (const auto& tx : txs) {
    apply(tx, pending_.size());
    pending_.push_back(tx);
  }
  return txs;
}

const Block& Chain::append_block(std::span<const Transaction> txs) {
  if (txs.empty()) throw Error(Errc::EmptyBatch, "no transactions to append");
  // Validate on a scratch copy so a failing batch leaves the chain untouched.
  Chain scratch = *this;
  for (std::size_t i = 0; i < txs.size(); ++i) {
    try {
      scratch.apply(txs[i], i);
    } catch (const Error& e) {
      if (e.code() == Errc::InvalidTransaction) throw;
      throw Error(Errc::InvalidTransaction, e.what(), i);
    }
  }
  accounts_ = std::move(scratch.accounts_);
  stories_ = std::move(scratch.stories_);
  last_step_ = scratch.last_step_;
  std::vector<Transaction> batch = std::move(pending_);
  pending_.clear();
  batch.insert(batch.end(), txs.begin(), txs.end());
  return seal(std::move(batch));
}

const Block& Chain::commit() {
  if (pending_.empty()) throw Error(Errc::EmptyBatch, "nothing pending");
  std::vector<Transaction> batch = std::move(pending_);
  pending_.clear();
  return seal(std::move(batch));
}

const Block& Chain::seal(std::vector<Transaction> txs) {
  Block b;
  b.index = blocks_.size();
  b.prev_hash = blocks_.back().hash;
  b.txs = std::move(txs);
  b.hash = block_digest(b.index, b.prev_hash, b.txs);
  blocks_.push_back(std::move(b));
  return blocks_.back();
}

void Chain::export_jsonl(std::ostream& out) const {
  for (const auto& b : blocks_) {
    nlohmann::ordered_json line;
    line["index"] = b.index;
    line["prev_hash"] = to_hex(b.prev_hash);
    line["hash"] = to_hex(b.hash);
    auto txs = nlohmann::ordered_json::array();
    for (const auto& tx : b.txs) {
      txs.push_back({{"kind", kind_name(tx.kind)},
                     {"user", tx.user_id},
                     {"story", tx.story_id},
                     {"vote", tx.vote_value},
                     {"step", tx.step},
                     {"delta", tx.reputation_delta}});
    }
    line["txs"] = std::move(txs);
    out << line.dump() << '\n';
  }
}

Chain Chain::import_jsonl(std::istream& in) {
  std::vector<Block> blocks;
  std::string text;
  while (std::getline(in, text)) {
    if (text.empty()) continue;
    try {
      auto j = nlohmann::json::parse(text);
      Block b;
      b.index = j.at("index").get<std::uint64_t>();
      b.prev_hash = digest_from_hex(j.at("prev_hash").get<std::string>());
      b.hash = digest_from_hex(j.at("hash").get<std::string>());
      for (const auto& t : j.at("txs")) {
        b.txs.push_back({kind_from_name(t.at("kind").get<std::string>()),
                         t.at("user").get<UserId>(), t.at("story").get<StoryId>(),
                         t.at("vote").get<std::int64_t>(), t.at("step").get<Step>(),
                         t.at("delta").get<Reputation>()});
      }
      blocks.push_back(std::move(b));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, e.what(), blocks.size());
    }
  }
  return from_blocks(std::move(blocks));
}

}  // namespace crowdledger::ledger
