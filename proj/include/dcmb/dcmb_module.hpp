#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmb/commitment.hpp"
#include "dcmb/crypto.hpp"
#include "dcmb/ledger.hpp"
#include "dcmb/types.hpp"

namespace dcmb {

struct DataRecord {
  std::string source_id;
  double value = 0;
  Tick collected_at = 0;
};

struct IntervalEntry {
  double lower = 0;
  double upper = 0;
  std::string label;
};

/// Ordered table of open intervals (lower, upper) -> qualitative label.
class IntervalMapping {
 public:
  IntervalMapping() = default;

  /// Throws Error(ConfigInvalid) unless lower < upper for every entry and the
  /// open intervals are pairwise disjoint. Touching bounds are allowed.
  static IntervalMapping create(std::vector<IntervalEntry> entries);

  const std::vector<IntervalEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::vector<IntervalEntry> entries_;
};

/// Label of the interval strictly containing `value`; bounds themselves are unmapped.
std::optional<std::string> map_to_interval(double value, const IntervalMapping& mapping);

struct EvidenceBlob {
  std::vector<Commitment> message_commitments;
  Digest blob_digest{};
  Signature blob_signature{};
};

/// SHA-256 over the ordered, length-prefixed commitment list.
Digest compute_blob_digest(std::span<const Commitment> commitments);

/// Seals and signs `pending`, leaving it empty. Throws SigningKeyUnavailable
/// when `key` is null and InvalidParams when `pending` is empty.
EvidenceBlob seal_blob(std::vector<Commitment>& pending, const SigningKey* key);

bool verify_blob(const EvidenceBlob& blob, const PublicKey& public_key);

nlohmann::json evidence_body(const std::string& module_id, const EvidenceBlob& blob);
EvidenceBlob blob_from_evidence_body(const nlohmann::json& body);

/// Where mapped labels go. The provisioning salt is shared out-of-band with
/// the contract owner.
struct ContractBinding {
  std::string contract_id;
  Salt provisioning_salt;
  HashParams params;
};

/// Declared behaviour profile of a module build. PlantedLeak copies the raw
/// value into Evidence bodies and exists to exercise certification.
enum class ModuleBehavior { Compliant, PlantedLeak };

std::string_view to_string(ModuleBehavior b);
ModuleBehavior module_behavior_from_string(std::string_view s);

struct ModuleConfig {
  std::string module_id;
  ParticipantId owner_id;
  ParticipantId peer_id;
  Tick collection_period = 12;
  std::size_t batch_size = 1;
  IntervalMapping mapping;
  std::optional<ContractBinding> contract;
  std::string signing_key;  // key name; empty means no key is available
  HashParams hash_params = HashParams::test();
  std::size_t salt_length = kDefaultSaltLength;
  /// Reused for every audit commitment when set (literal replay of the
  /// single-salt example); otherwise each entry gets a fresh salt.
  std::optional<Salt> fixed_salt;
  ModuleBehavior behavior = ModuleBehavior::Compliant;

  void validate() const;
  nlohmann::json to_json() const;
};

struct OutboundMessage {
  ParticipantId to;
  Bytes payload;
};

struct ModuleEvent {
  Tick tick = 0;
  std::string type;
  nlohmann::json detail;
};

/// What the sender keeps privately to open its commitments later.
struct Disclosure {
  Bytes payload;
  Salt salt;
};

struct TickOutput {
  std::vector<OutboundMessage> p2p_messages;
  std::vector<Transaction> evidence_txs;
  std::vector<Transaction> contract_txs;
  std::vector<ModuleEvent> events;
  std::vector<Disclosure> disclosures;

  bool empty() const {
    return p2p_messages.empty() && evidence_txs.empty() && contract_txs.empty() && events.empty();
  }
};

/// One sender-side pipeline instance. Owns its pending batch.
class DcmbModule {
 public:
  DcmbModule(ModuleConfig config, std::optional<SigningKey> key);

  const ModuleConfig& config() const noexcept { return config_; }
  std::optional<PublicKey> public_key() const;

  /// Processes one collection period's records: raw payload to the peer,
  /// salted commitment into the batch, and a ContractInput when the value maps
  /// to a label. Full batches are sealed into Evidence transactions.
  TickOutput sender_tick(std::span<const DataRecord> records, RandomSource& rng, Tick now);

  /// Seals whatever is pending (end of collection period / end of run).
  std::optional<Transaction> flush(Tick now, std::vector<ModuleEvent>* events = nullptr);

  const std::vector<Commitment>& pending() const noexcept { return pending_; }

 private:
  Transaction seal_pending(Tick now, std::vector<ModuleEvent>* events);

  ModuleConfig config_;
  std::optional<SigningKey> key_;
  std::vector<Commitment> pending_;
  std::vector<Bytes> pending_payloads_;
};

/// Integrity half of the TEE: the running binary's digest must equal the
/// build digest certified on-chain. Throws Error(NotCertified) if the ledger
/// holds no certification record for `module_id`.
bool attest_module(const Ledger& ledger, const std::string& module_id, const Digest& module_binary_digest);

}  // namespace dcmb
