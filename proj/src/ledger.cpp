#include "dcmb/ledger.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dcmb/crypto.hpp"
#include "dcmb/errors.hpp"
#include "dcmb/leak_scan.hpp"

namespace dcmb {

using nlohmann::json;

std::string_view to_string(TxKind k) {
  switch (k) {
    case TxKind::Evidence: return "Evidence";
    case TxKind::ContractInput: return "ContractInput";
    case TxKind::ContractEvent: return "ContractEvent";
    case TxKind::Certification: return "Certification";
  }
  return "Unknown";
}

TxKind tx_kind_from_string(std::string_view s) {
  for (TxKind k : {TxKind::Evidence, TxKind::ContractInput, TxKind::ContractEvent, TxKind::Certification})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::ParseError, "unknown transaction kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Transaction / Block

Transaction Transaction::make(TxKind kind, ParticipantId sender, json body, Tick timestamp) {
  Transaction tx;
  tx.kind = kind;
  tx.sender_id = std::move(sender);
  tx.body = std::move(body);
  tx.timestamp = timestamp;
  tx.tx_id = tx.compute_id();
  return tx;
}

Digest Transaction::compute_id() const {
  const json preimage = {
      {"kind", to_string(kind)}, {"sender", sender_id}, {"body", body}, {"timestamp", timestamp}};
  return sha256(preimage.dump());
}

json Transaction::to_json() const {
  return json{{"tx_id", to_hex(tx_id)},
              {"kind", to_string(kind)},
              {"sender", sender_id},
              {"body", body},
              {"timestamp", timestamp}};
}

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  return j.at(key);
}

std::uint64_t uint_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_unsigned()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' not unsigned");
  return v.get<std::uint64_t>();
}

const std::string& string_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' not a string");
  return v.get_ref<const std::string&>();
}

}  // namespace

Transaction Transaction::from_json(const json& j) {
  if (!j.is_object() || j.size() != 5) throw Error(ErrorCode::ParseError, "transaction must have exactly 5 fields");
  Transaction tx;
  tx.tx_id = digest_from_hex(string_field(j, "tx_id"));
  tx.kind = tx_kind_from_string(string_field(j, "kind"));
  tx.sender_id = string_field(j, "sender");
  tx.body = field(j, "body");
  tx.timestamp = uint_field(j, "timestamp");
  return tx;
}

Digest Block::compute_hash() const {
  json txs_json = json::array();
  for (const auto& tx : txs) txs_json.push_back(tx.to_json());
  const json preimage = {{"height", height}, {"prev_hash", to_hex(prev_hash)}, {"txs", std::move(txs_json)}};
  return sha256(preimage.dump());
}

json Block::to_json() const {
  json txs_json = json::array();
  for (const auto& tx : txs) txs_json.push_back(tx.to_json());
  return json{{"height", height},
              {"prev_hash", to_hex(prev_hash)},
              {"block_hash", to_hex(block_hash)},
              {"txs", std::move(txs_json)}};
}

Block Block::from_json(const json& j) {
  if (!j.is_object() || j.size() != 4) throw Error(ErrorCode::ParseError, "block must have exactly 4 fields");
  Block b;
  b.height = uint_field(j, "height");
  b.prev_hash = digest_from_hex(string_field(j, "prev_hash"));
  b.block_hash = digest_from_hex(string_field(j, "block_hash"));
  const json& txs = field(j, "txs");
  if (!txs.is_array()) throw Error(ErrorCode::ParseError, "txs must be an array");
  for (const auto& t : txs) b.txs.push_back(Transaction::from_json(t));
  return b;
}

// ---------------------------------------------------------------------------
// Verification and persistence

ChainCheck verify_chain(std::span<const Block> blocks) {
  Digest expected_prev{};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    auto bad = [&](std::string reason) { return ChainCheck{false, i, std::move(reason)}; };
    if (b.height != i) return bad("height not contiguous");
    if (b.prev_hash != expected_prev) return bad("prev_hash does not link to previous block");
    for (const auto& tx : b.txs) {
      if (tx.compute_id() != tx.tx_id) return bad("tx_id mismatch for " + to_hex(tx.tx_id));
    }
    if (b.compute_hash() != b.block_hash) return bad("block_hash mismatch");
    expected_prev = b.block_hash;
  }
  return {};
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

Block parse_canonical_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  Block b = Block::from_json(j);
  std::string canonical;
  try {
    canonical = b.to_json().dump();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (canonical != line) throw Error(ErrorCode::ParseError, "line is not in canonical form");
  return b;
}

}  // namespace

ChainCheck verify_chain_text(std::string_view ndjson) {
  std::vector<Block> blocks;
  const auto lines = split_lines(ndjson);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      blocks.push_back(parse_canonical_line(lines[i]));
    } catch (const Error& e) {
      ChainCheck prefix = verify_chain(blocks);
      return prefix.ok ? ChainCheck{false, i, e.what()} : prefix;
    }
  }
  return verify_chain(blocks);
}

std::vector<Block> parse_ledger(std::string_view ndjson) {
  std::vector<Block> blocks;
  const auto lines = split_lines(ndjson);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      blocks.push_back(parse_canonical_line(lines[i]));
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return blocks;
}

std::string serialize_blocks(std::span<const Block> blocks) {
  std::string out;
  for (const auto& b : blocks) {
    out += b.to_json().dump();
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::vector<AuditHit> audit_lookup(std::span<const Block> blocks, ByteView commitment_hash) {
  std::vector<AuditHit> hits;
  for (const auto& b : blocks) {
    for (const auto& tx : b.txs) {
      if (tx.kind != TxKind::Evidence || !tx.body.contains("commitments")) continue;
      for (const auto& c : tx.body.at("commitments")) {
        const Bytes h = from_hex(c.at("hash").get<std::string>());
        if (constant_time_equal(h, commitment_hash)) {
          hits.push_back(AuditHit{b.height, tx.tx_id, from_hex(c.at("salt").get<std::string>()),
                                  c.at("params_id").get<std::string>()});
        }
      }
    }
  }
  return hits;
}

// ---------------------------------------------------------------------------
// Ledger

Ledger::Ledger(LedgerConfig config) : config_(config) {
  if (config_.block_capacity == 0) throw Error(ErrorCode::ConfigInvalid, "block capacity must be positive");
}

void Ledger::register_participant(const ParticipantId& id, Role role) {
  auto [it, inserted] = participants_.emplace(id, role);
  if (!inserted && it->second != role)
    throw Error(ErrorCode::ConfigInvalid, "participant '" + id + "' registered with two roles");
}

std::optional<Role> Ledger::role_of(const ParticipantId& id) const {
  auto it = participants_.find(id);
  if (it == participants_.end()) return std::nullopt;
  return it->second;
}

std::vector<ParticipantId> Ledger::participants_with_role(Role role) const {
  std::vector<ParticipantId> out;
  for (const auto& [id, r] : participants_)
    if (r == role) out.push_back(id);
  return out;
}

void Ledger::register_leak_pattern(Bytes pattern) {
  if (pattern.empty()) return;
  if (std::find(leak_patterns_.begin(), leak_patterns_.end(), pattern) == leak_patterns_.end())
    leak_patterns_.push_back(std::move(pattern));
}

namespace {

void check_evidence_shape(const json& body) {
  if (!body.is_object() || !body.contains("commitments") || !body.at("commitments").is_array())
    throw Error(ErrorCode::MalformedTransaction, "Evidence body needs a commitments array");
  for (const auto& c : body.at("commitments")) {
    if (!c.is_object() || !c.contains("hash") || !c.contains("salt") || !c.contains("params_id") ||
        !c.at("hash").is_string() || !c.at("salt").is_string() || !c.at("params_id").is_string() ||
        !is_lower_hex(c.at("hash").get_ref<const std::string&>()) ||
        !is_lower_hex(c.at("salt").get_ref<const std::string&>()))
      throw Error(ErrorCode::MalformedTransaction, "Evidence commitment must carry hash, salt and params_id");
    try {
      HashParams::parse(c.at("params_id").get<std::string>());
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedTransaction, std::string("Evidence commitment params_id: ") + e.what());
    }
  }
}

}  // namespace

Receipt Ledger::submit_transaction(Transaction tx) {
  if (!is_registered(tx.sender_id)) throw Error(ErrorCode::UnknownSender, "sender '" + tx.sender_id + "'");
  if (tx.compute_id() != tx.tx_id) throw Error(ErrorCode::MalformedTransaction, "tx_id does not match body");

  if (tx.kind == TxKind::Evidence) check_evidence_shape(tx.body);
  if (tx.kind == TxKind::ContractInput) {
    if (!tx.body.contains("contract_id") || !tx.body.contains("value") || !tx.body.at("value").is_string() ||
        !is_lower_hex(tx.body.at("value").get_ref<const std::string&>()))
      throw Error(ErrorCode::MalformedTransaction, "ContractInput needs contract_id and hex value");
    if (!find_contract(tx.body.at("contract_id").get<std::string>()))
      throw Error(ErrorCode::MalformedTransaction, "ContractInput targets an unknown contract");
  }
  if (tx.kind == TxKind::Evidence || tx.kind == TxKind::ContractInput) {
    if (auto leak = find_leak(tx.body, leak_patterns_)) throw Error(ErrorCode::LeakRejected, *leak);
  }

  Receipt r{tx.tx_id, true};
  pending_.push_back(std::move(tx));
  return r;
}

const Block& Ledger::seal_block(Tick now) {
  Block b;
  b.height = blocks_.size();
  if (!blocks_.empty()) b.prev_hash = blocks_.back().block_hash;
  const std::size_t n = std::min(config_.block_capacity, pending_.size());
  for (std::size_t i = 0; i < n; ++i) {
    b.txs.push_back(std::move(pending_.front()));
    pending_.pop_front();
  }
  b.block_hash = b.compute_hash();
  blocks_.push_back(std::move(b));
  const Block& sealed = blocks_.back();

  for (const auto& tx : sealed.txs) {
    if (tx.kind != TxKind::ContractInput) continue;
    const std::string contract_id = tx.body.at("contract_id").get<std::string>();
    const EqualityContract* contract = find_contract(contract_id);
    if (!contract) continue;
    const Bytes value = from_hex(tx.body.at("value").get<std::string>());
    const auto index = match_condition(*contract, value);
    if (!index) continue;
    const ActionSpec& action = contract->conditions[*index].action;
    json body = {{"contract_id", contract_id},
                 {"trigger_tx", to_hex(tx.tx_id)},
                 {"condition", *index},
                 {"action", dcmb::to_json(action)}};
    Transaction event = Transaction::make(TxKind::ContractEvent, contract->owner_id, std::move(body), now);
    firings_.push_back(ContractFiring{contract_id, *index, action, tx.tx_id, event.tx_id, sealed.height});
    pending_.push_back(std::move(event));
  }
  return sealed;
}

std::vector<ContractFiring> Ledger::take_firings() { return std::exchange(firings_, {}); }

void Ledger::register_contract(EqualityContract contract) {
  const std::string id = contract.contract_id;
  if (!contracts_.emplace(id, std::move(contract)).second)
    throw Error(ErrorCode::DuplicateContract, "contract '" + id + "' already deployed");
}

const EqualityContract* Ledger::find_contract(const std::string& contract_id) const {
  auto it = contracts_.find(contract_id);
  return it == contracts_.end() ? nullptr : &it->second;
}

}  // namespace dcmb
