#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmb/bytes.hpp"
#include "dcmb/contracts.hpp"
#include "dcmb/types.hpp"

namespace dcmb {

enum class TxKind { Evidence, ContractInput, ContractEvent, Certification };

std::string_view to_string(TxKind k);
TxKind tx_kind_from_string(std::string_view s);

struct Transaction {
  Digest tx_id{};
  TxKind kind = TxKind::Evidence;
  ParticipantId sender_id;
  nlohmann::json body = nlohmann::json::object();
  Tick timestamp = 0;

  /// Builds a transaction with tx_id filled in.
  static Transaction make(TxKind kind, ParticipantId sender, nlohmann::json body, Tick timestamp);

  /// SHA-256 over the canonical serialization of (kind, sender, body, timestamp).
  Digest compute_id() const;

  nlohmann::json to_json() const;
  static Transaction from_json(const nlohmann::json& j);
};

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash{};
  std::vector<Transaction> txs;
  Digest block_hash{};

  Digest compute_hash() const;
  nlohmann::json to_json() const;
  static Block from_json(const nlohmann::json& j);
};

struct ChainCheck {
  bool ok = true;
  std::optional<std::uint64_t> first_bad_height;
  std::string reason;
};

/// Recomputes every tx id, block hash and prev link.
ChainCheck verify_chain(std::span<const Block> blocks);

/// Verifies newline-delimited ledger text. Every line must parse and be in
/// canonical form; an unparseable line is reported at its line index.
ChainCheck verify_chain_text(std::string_view ndjson);

/// Strict loader, throws Error(ParseError) on the first bad line.
std::vector<Block> parse_ledger(std::string_view ndjson);
std::string serialize_blocks(std::span<const Block> blocks);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

struct Receipt {
  Digest tx_id{};
  bool pending = true;
};

struct AuditHit {
  std::uint64_t block_height = 0;
  Digest tx_id{};
  Bytes salt;
  std::string params_id;
};

/// All Evidence commitments in `blocks` whose hash equals `commitment_hash`.
std::vector<AuditHit> audit_lookup(std::span<const Block> blocks, ByteView commitment_hash);

struct ContractFiring {
  std::string contract_id;
  std::size_t condition_index = 0;
  ActionSpec action;
  Digest trigger_tx{};
  Digest event_tx{};
  std::uint64_t height = 0;
};

struct LedgerConfig {
  std::size_t block_capacity = 100;
};

/// Append-only block store with a single sequencer. Sealed blocks are only
/// reachable through const references.
class Ledger {
 public:
  explicit Ledger(LedgerConfig config = {});

  void register_participant(const ParticipantId& id, Role role);
  std::optional<Role> role_of(const ParticipantId& id) const;
  bool is_registered(const ParticipantId& id) const { return role_of(id).has_value(); }
  std::vector<ParticipantId> participants_with_role(Role role) const;

  /// Plaintext that must never appear in Evidence or ContractInput bodies.
  void register_leak_pattern(Bytes pattern);

  Receipt submit_transaction(Transaction tx);

  /// Seals up to block_capacity pending transactions (possibly none) and
  /// evaluates every ContractInput in the new block. Resulting ContractEvent
  /// transactions enter the pending pool for the next block.
  const Block& seal_block(Tick now);

  /// Firings produced since the last call.
  std::vector<ContractFiring> take_firings();

  ChainCheck verify_chain() const { return dcmb::verify_chain(blocks_); }
  std::vector<AuditHit> audit_lookup(ByteView commitment_hash) const {
    return dcmb::audit_lookup(blocks_, commitment_hash);
  }

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const std::deque<Transaction>& pending() const noexcept { return pending_; }
  std::size_t block_capacity() const noexcept { return config_.block_capacity; }

  void register_contract(EqualityContract contract);
  const EqualityContract* find_contract(const std::string& contract_id) const;

  std::string to_ndjson() const { return serialize_blocks(blocks_); }

 private:
  LedgerConfig config_;
  std::vector<Block> blocks_;
  std::deque<Transaction> pending_;
  std::map<ParticipantId, Role> participants_;
  std::map<std::string, EqualityContract> contracts_;
  std::vector<Bytes> leak_patterns_;
  std::vector<ContractFiring> firings_;
};

}  // namespace dcmb
