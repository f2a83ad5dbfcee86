#include "dcmb/dcmb_module.hpp"

#include <algorithm>
#include <cmath>

#include "dcmb/certification.hpp"
#include "dcmb/errors.hpp"

namespace dcmb {

using nlohmann::json;

IntervalMapping IntervalMapping::create(std::vector<IntervalEntry> entries) {
  for (const auto& e : entries) {
    if (!std::isfinite(e.lower) || !std::isfinite(e.upper) || !(e.lower < e.upper))
      throw Error(ErrorCode::ConfigInvalid, "interval '" + e.label + "' needs finite lower < upper");
    if (e.label.empty()) throw Error(ErrorCode::ConfigInvalid, "interval label is empty");
  }
  std::vector<IntervalEntry> sorted = entries;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.lower < b.lower; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].lower < sorted[i - 1].upper)
      throw Error(ErrorCode::ConfigInvalid,
                  "intervals '" + sorted[i - 1].label + "' and '" + sorted[i].label + "' overlap");
  }
  IntervalMapping m;
  m.entries_ = std::move(entries);
  return m;
}

std::optional<std::string> map_to_interval(double value, const IntervalMapping& mapping) {
  for (const auto& e : mapping.entries()) {
    if (value > e.lower && value < e.upper) return e.label;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Evidence blobs

Digest compute_blob_digest(std::span<const Commitment> commitments) {
  Bytes buf = to_bytes("dcmb/blob/v1");
  append_u32_be(buf, static_cast<std::uint32_t>(commitments.size()));
  for (const auto& c : commitments) {
    append_u32_be(buf, static_cast<std::uint32_t>(c.hash.size()));
    append(buf, c.hash);
    append_u32_be(buf, static_cast<std::uint32_t>(c.salt.bytes.size()));
    append(buf, c.salt.bytes);
    append_u32_be(buf, static_cast<std::uint32_t>(c.params_id.size()));
    append(buf, to_bytes(c.params_id));
  }
  return sha256(buf);
}

EvidenceBlob seal_blob(std::vector<Commitment>& pending, const SigningKey* key) {
  if (!key) throw Error(ErrorCode::SigningKeyUnavailable, "module has no signing key");
  if (pending.empty()) throw Error(ErrorCode::InvalidParams, "cannot seal an empty batch");
  EvidenceBlob blob;
  blob.message_commitments = std::move(pending);
  pending.clear();
  blob.blob_digest = compute_blob_digest(blob.message_commitments);
  blob.blob_signature = key->sign(blob.blob_digest);
  return blob;
}

bool verify_blob(const EvidenceBlob& blob, const PublicKey& public_key) {
  if (compute_blob_digest(blob.message_commitments) != blob.blob_digest) return false;
  return verify_signature(public_key, blob.blob_digest, blob.blob_signature);
}

json evidence_body(const std::string& module_id, const EvidenceBlob& blob) {
  json commitments = json::array();
  for (const auto& c : blob.message_commitments) {
    commitments.push_back({{"hash", to_hex(c.hash)}, {"salt", to_hex(c.salt.bytes)}, {"params_id", c.params_id}});
  }
  return json{{"module_id", module_id},
              {"commitments", std::move(commitments)},
              {"blob_digest", to_hex(blob.blob_digest)},
              {"signature", to_hex(blob.blob_signature)}};
}

EvidenceBlob blob_from_evidence_body(const json& body) {
  try {
    EvidenceBlob blob;
    for (const auto& c : body.at("commitments")) {
      blob.message_commitments.push_back(Commitment{from_hex(c.at("hash").get<std::string>()),
                                                    Salt{from_hex(c.at("salt").get<std::string>())},
                                                    c.at("params_id").get<std::string>()});
    }
    blob.blob_digest = digest_from_hex(body.at("blob_digest").get<std::string>());
    const Bytes sig = from_hex(body.at("signature").get<std::string>());
    if (sig.size() != kSignatureSize) throw Error(ErrorCode::ParseError, "signature must be 64 bytes");
    std::copy(sig.begin(), sig.end(), blob.blob_signature.begin());
    return blob;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("evidence body: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Module

std::string_view to_string(ModuleBehavior b) { return b == ModuleBehavior::Compliant ? "compliant" : "planted_leak"; }

ModuleBehavior module_behavior_from_string(std::string_view s) {
  if (s == "compliant") return ModuleBehavior::Compliant;
  if (s == "planted_leak") return ModuleBehavior::PlantedLeak;
  throw Error(ErrorCode::ConfigInvalid, "unknown module behavior '" + std::string(s) + "'");
}

void ModuleConfig::validate() const {
  if (module_id.empty()) throw Error(ErrorCode::ConfigInvalid, "module_id is empty");
  if (collection_period < 1) throw Error(ErrorCode::ConfigInvalid, module_id + ": collection_period must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::ConfigInvalid, module_id + ": batch_size must be >= 1");
  if (salt_length < 1) throw Error(ErrorCode::ConfigInvalid, module_id + ": salt_length must be >= 1");
  hash_params.validate();
  if (contract) contract->params.validate();
}

json ModuleConfig::to_json() const {
  json mapping_json = json::array();
  for (const auto& e : mapping.entries())
    mapping_json.push_back({{"lower", e.lower}, {"upper", e.upper}, {"label", e.label}});
  json j = {{"module_id", module_id},
            {"owner", owner_id},
            {"peer", peer_id},
            {"collection_period", collection_period},
            {"batch_size", batch_size},
            {"mapping", std::move(mapping_json)},
            {"signing_key", signing_key},
            {"hash_params", hash_params.id()},
            {"salt_length", salt_length},
            {"behavior", to_string(behavior)}};
  if (contract) {
    j["contract"] = {{"contract_id", contract->contract_id},
                     {"provisioning_salt", to_hex(contract->provisioning_salt.bytes)},
                     {"hash_params", contract->params.id()}};
  }
  if (fixed_salt) j["fixed_salt"] = to_hex(fixed_salt->bytes);
  return j;
}

DcmbModule::DcmbModule(ModuleConfig config, std::optional<SigningKey> key)
    : config_(std::move(config)), key_(std::move(key)) {
  config_.validate();
}

std::optional<PublicKey> DcmbModule::public_key() const {
  if (!key_) return std::nullopt;
  return key_->public_key();
}

Transaction DcmbModule::seal_pending(Tick now, std::vector<ModuleEvent>* events) {
  std::vector<Bytes> raw = std::move(pending_payloads_);
  pending_payloads_.clear();
  const EvidenceBlob blob = seal_blob(pending_, key_ ? &*key_ : nullptr);
  json body = evidence_body(config_.module_id, blob);
  if (config_.behavior == ModuleBehavior::PlantedLeak) {
    json copied = json::array();
    for (const auto& p : raw) copied.push_back(to_string(p));
    body["debug_values"] = std::move(copied);
  }
  if (events) {
    events->push_back(ModuleEvent{now, "BlobSealed",
                                  json{{"module_id", config_.module_id},
                                       {"commitments", blob.message_commitments.size()},
                                       {"blob_digest", to_hex(blob.blob_digest)}}});
  }
  return Transaction::make(TxKind::Evidence, config_.owner_id, std::move(body), now);
}

TickOutput DcmbModule::sender_tick(std::span<const DataRecord> records, RandomSource& rng, Tick now) {
  TickOutput out;
  if (!records.empty() && !key_)
    throw Error(ErrorCode::SigningKeyUnavailable, config_.module_id + " has no signing key");

  for (const auto& rec : records) {
    const std::string payload = render_number(rec.value);
    const Bytes payload_bytes = to_bytes(payload);

    if (auto label = map_to_interval(rec.value, config_.mapping)) {
      if (config_.contract) {
        const Commitment label_commitment = commit(*label, config_.contract->provisioning_salt, config_.contract->params);
        json body = {{"contract_id", config_.contract->contract_id}, {"value", to_hex(label_commitment.hash)}};
        out.contract_txs.push_back(Transaction::make(TxKind::ContractInput, config_.owner_id, std::move(body), now));
      }
    } else if (!config_.mapping.empty()) {
      out.events.push_back(ModuleEvent{now, "UnmappedValue",
                                       json{{"module_id", config_.module_id}, {"source_id", rec.source_id}}});
    }

    const Salt salt = config_.fixed_salt ? *config_.fixed_salt : generate_salt(rng, config_.salt_length);
    pending_.push_back(commit(payload_bytes, salt, config_.hash_params));
    pending_payloads_.push_back(payload_bytes);
    out.disclosures.push_back(Disclosure{payload_bytes, salt});
    out.p2p_messages.push_back(OutboundMessage{config_.peer_id, payload_bytes});

    if (pending_.size() >= config_.batch_size) out.evidence_txs.push_back(seal_pending(now, &out.events));
  }
  return out;
}

std::optional<Transaction> DcmbModule::flush(Tick now, std::vector<ModuleEvent>* events) {
  if (pending_.empty()) return std::nullopt;
  return seal_pending(now, events);
}

bool attest_module(const Ledger& ledger, const std::string& module_id, const Digest& module_binary_digest) {
  const auto record = latest_certification_record(ledger.blocks(), module_id);
  if (!record) throw Error(ErrorCode::NotCertified, "no certification record for '" + module_id + "'");
  return record->status == CertificationStatus::Certified &&
         constant_time_equal(record->build_digest, module_binary_digest);
}

}  // namespace dcmb
