#include "dcmb/certification.hpp"

#include <set>

#include "dcmb/dcmb_module.hpp"
#include "dcmb/errors.hpp"
#include "dcmb/leak_scan.hpp"

namespace dcmb {

using nlohmann::json;

std::string_view to_string(Verdict v) { return v == Verdict::Certify ? "certify" : "reject"; }

Verdict verdict_from_string(std::string_view s) {
  if (s == "certify") return Verdict::Certify;
  if (s == "reject") return Verdict::Reject;
  throw Error(ErrorCode::ParseError, "unknown verdict '" + std::string(s) + "'");
}

std::string_view to_string(Visibility v) { return v == Visibility::Public ? "public" : "validators_only"; }

Visibility visibility_from_string(std::string_view s) {
  if (s == "public") return Visibility::Public;
  if (s == "validators_only") return Visibility::ValidatorsOnly;
  throw Error(ErrorCode::ConfigInvalid, "unknown visibility '" + std::string(s) + "'");
}

std::string_view to_string(DenyReason r) {
  switch (r) {
    case DenyReason::None: return "none";
    case DenyReason::NotCertified: return "NotCertified";
    case DenyReason::DigestMismatch: return "DigestMismatch";
  }
  return "unknown";
}

Digest module_build_digest(const ModuleConfig& config) {
  return sha256("dcmb/build/module/v1" + config.to_json().dump());
}

Digest contract_build_digest(const EqualityContract& contract) {
  json conditions = json::array();
  for (const auto& c : contract.conditions)
    conditions.push_back({{"stored_hash", to_hex(c.stored_hash)}, {"action", to_json(c.action)}});
  const json j = {{"contract_id", contract.contract_id},
                  {"owner", contract.owner_id},
                  {"params_id", contract.params_id},
                  {"conditions", std::move(conditions)}};
  return sha256("dcmb/build/contract/v1" + j.dump());
}

Digest source_digest(std::string_view source) { return sha256(source); }

void ValidationSubmission::validate() const {
  if (module_id.empty()) throw Error(ErrorCode::ConfigInvalid, "submission without module_id");
  if (source_digest == Digest{} || build_digest == Digest{})
    throw Error(ErrorCode::ConfigInvalid, "submission digests must be non-zero");
}

bool can_fetch_source(const ValidationSubmission& submission, Role who_role, const ParticipantId& who,
                      const ParticipantId& owner, const ParticipantId& peer) {
  if (who_role == Role::Validator) return true;
  if (submission.visibility == Visibility::ValidatorsOnly) return false;
  return who == owner || who == peer;
}

bool QuorumRule::certifies(std::size_t certify_votes, std::size_t registered_validators) const {
  switch (kind) {
    case Kind::StrictMajority: return 2 * certify_votes > registered_validators;
    case Kind::Unanimous: return registered_validators > 0 && certify_votes == registered_validators;
    case Kind::AtLeast: return certify_votes >= threshold && threshold > 0;
  }
  return false;
}

QuorumRule QuorumRule::parse(std::string_view text) {
  if (text == "strict_majority") return {Kind::StrictMajority, 0};
  if (text == "unanimous") return {Kind::Unanimous, 0};
  if (text.starts_with("at_least:")) {
    const std::string n(text.substr(9));
    try {
      const auto k = std::stoul(n);
      if (k > 0) return {Kind::AtLeast, k};
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown quorum rule '" + std::string(text) + "'");
}

std::string QuorumRule::to_string() const {
  switch (kind) {
    case Kind::StrictMajority: return "strict_majority";
    case Kind::Unanimous: return "unanimous";
    case Kind::AtLeast: return "at_least:" + std::to_string(threshold);
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Validation

std::vector<ValidationCheck> default_module_checks() {
  return {check_by_id("no_raw_payload_on_ledger"), check_by_id("fresh_salt_usage"),
          check_by_id("blob_signature_valid"), check_by_id("evidence_batching")};
}

std::vector<ValidationCheck> default_contract_checks() {
  return {check_by_id("labels_hashed"), check_by_id("distinct_conditions")};
}

ValidationCheck check_by_id(std::string_view check_id) {
  static const std::vector<ValidationCheck> kKnown{
      {"no_raw_payload_on_ledger", "no Evidence or ContractInput body carries a dataset value or label"},
      {"fresh_salt_usage", "audit salts are pairwise distinct and differ from the contract provisioning salt"},
      {"blob_signature_valid", "every evidence blob digest recomputes and its signature verifies"},
      {"evidence_batching", "one Evidence transaction per batch_size commitments"},
      {"labels_hashed", "the deployed condition table carries digests only"},
      {"distinct_conditions", "stored digests are pairwise distinct"},
  };
  for (const auto& c : kKnown)
    if (c.check_id == check_id) return c;
  throw Error(ErrorCode::ConfigInvalid, "unknown validation check '" + std::string(check_id) + "'");
}

json ValidationLog::to_json() const {
  json outcomes_json = json::array();
  for (const auto& o : outcomes)
    outcomes_json.push_back({{"check_id", o.check_id}, {"passed", o.passed}, {"detail", o.detail}});
  return json{{"subject", subject_id}, {"outcomes", std::move(outcomes_json)}};
}

Digest ValidationLog::digest() const { return sha256(to_json().dump()); }

namespace {

ValidationResult finish(ValidationLog log) {
  bool all = !log.outcomes.empty();
  for (const auto& o : log.outcomes) all = all && o.passed;
  return ValidationResult{all ? Verdict::Certify : Verdict::Reject, std::move(log)};
}

}  // namespace

ValidationResult run_validation(const ModuleConfig& module_under_test, std::span<const double> dataset,
                                std::span<const ValidationCheck> checks) {
  if (dataset.empty()) throw Error(ErrorCode::DatasetMissing, "validation dataset is empty");
  if (checks.empty()) throw Error(ErrorCode::DatasetMissing, "validation check list is empty");

  ValidationLog log;
  log.subject_id = module_under_test.module_id;

  // Validators build with their own key; the owner's key never leaves the owner.
  const Digest key_seed = sha256("dcmb/validation-key/" + module_under_test.module_id);
  DcmbModule module(module_under_test, SigningKey::from_seed(key_seed));
  DeterministicRandom rng(0, "dcmb/validation/" + module_under_test.module_id);

  std::vector<DataRecord> records;
  for (double v : dataset) records.push_back(DataRecord{"validation", v, 0});

  std::vector<Transaction> evidence;
  std::vector<Transaction> inputs;
  std::string run_error;
  try {
    TickOutput out = module.sender_tick(records, rng, 0);
    evidence = std::move(out.evidence_txs);
    inputs = std::move(out.contract_txs);
    if (auto tail = module.flush(0)) evidence.push_back(std::move(*tail));
  } catch (const Error& e) {
    run_error = e.what();
  }

  std::vector<Bytes> patterns;
  for (double v : dataset) patterns.push_back(to_bytes(render_number(v)));
  for (const auto& e : module_under_test.mapping.entries()) patterns.push_back(to_bytes(e.label));

  for (const auto& check : checks) {
    CheckOutcome o{check.check_id, false, {}};
    if (!run_error.empty()) {
      o.detail = "module run failed: " + run_error;
      log.outcomes.push_back(std::move(o));
      continue;
    }
    if (check.check_id == "no_raw_payload_on_ledger") {
      o.passed = true;
      for (const auto* txs : {&evidence, &inputs}) {
        for (const auto& tx : *txs) {
          if (auto leak = find_leak(tx.body, patterns)) {
            o.passed = false;
            o.detail = std::string(to_string(tx.kind)) + " " + *leak;
            break;
          }
        }
        if (!o.passed) break;
      }
    } else if (check.check_id == "fresh_salt_usage") {
      std::set<Bytes> salts;
      o.passed = true;
      for (const auto& tx : evidence) {
        for (const auto& c : blob_from_evidence_body(tx.body).message_commitments) {
          if (!salts.insert(c.salt.bytes).second) {
            o.passed = false;
            o.detail = "audit salt reused";
          }
          if (module_under_test.contract && c.salt == module_under_test.contract->provisioning_salt) {
            o.passed = false;
            o.detail = "audit salt equals the contract provisioning salt";
          }
        }
      }
    } else if (check.check_id == "blob_signature_valid") {
      o.passed = !module_under_test.signing_key.empty();
      if (!o.passed) o.detail = "no signing key configured";
      for (const auto& tx : evidence) {
        if (!verify_blob(blob_from_evidence_body(tx.body), *module.public_key())) {
          o.passed = false;
          o.detail = "blob signature does not verify";
        }
      }
    } else if (check.check_id == "evidence_batching") {
      const std::size_t b = module_under_test.batch_size;
      const std::size_t expected = (dataset.size() + b - 1) / b;
      o.passed = evidence.size() == expected;
      if (!o.passed)
        o.detail = "expected " + std::to_string(expected) + " evidence txs, got " + std::to_string(evidence.size());
    } else {
      throw Error(ErrorCode::ConfigInvalid, "check '" + check.check_id + "' does not apply to modules");
    }
    log.outcomes.push_back(std::move(o));
  }
  return finish(std::move(log));
}

ValidationResult run_contract_validation(const ContractDefinition& definition,
                                         std::span<const ValidationCheck> checks) {
  if (checks.empty()) throw Error(ErrorCode::DatasetMissing, "validation check list is empty");
  if (definition.conditions.empty()) throw Error(ErrorCode::DatasetMissing, "contract has no conditions to validate");
  ValidationLog log;
  log.subject_id = definition.contract_id;
  const EqualityContract contract = build_contract(definition);

  std::vector<Bytes> labels;
  for (const auto& c : definition.conditions) labels.push_back(to_bytes(c.label));

  for (const auto& check : checks) {
    CheckOutcome o{check.check_id, true, {}};
    if (check.check_id == "labels_hashed") {
      json table = json::array();
      for (const auto& c : contract.conditions)
        table.push_back({{"stored_hash", to_hex(c.stored_hash)}, {"action", to_json(c.action)}});
      if (auto leak = find_leak(table, labels)) {
        o.passed = false;
        o.detail = *leak;
      }
    } else if (check.check_id == "distinct_conditions") {
      std::set<Bytes> seen;
      for (const auto& c : contract.conditions) {
        if (!seen.insert(c.stored_hash).second) {
          o.passed = false;
          o.detail = "duplicate stored digest";
        }
      }
    } else {
      throw Error(ErrorCode::ConfigInvalid, "check '" + check.check_id + "' does not apply to contracts");
    }
    log.outcomes.push_back(std::move(o));
  }
  return finish(std::move(log));
}

// ---------------------------------------------------------------------------
// On-chain voting

namespace {

bool is_cert_tx(const Transaction& tx, std::string_view type, const std::string& module_id) {
  return tx.kind == TxKind::Certification && tx.body.is_object() && tx.body.value("type", "") == type &&
         tx.body.value("module_id", "") == module_id;
}

struct RoundInfo {
  std::uint64_t round = 0;
  Tick opened_at = 0;
  Digest source{};
  Digest build{};
  ParticipantId submitter;
};

std::optional<RoundInfo> latest_round(const Ledger& ledger, const std::string& module_id, bool include_pending) {
  std::optional<RoundInfo> info;
  auto visit = [&](const Transaction& tx) {
    if (!is_cert_tx(tx, "submission", module_id)) return;
    info = RoundInfo{tx.body.at("round").get<std::uint64_t>(), tx.timestamp,
                     digest_from_hex(tx.body.at("source_digest").get<std::string>()),
                     digest_from_hex(tx.body.at("build_digest").get<std::string>()), tx.sender_id};
  };
  for (const auto& b : ledger.blocks())
    for (const auto& tx : b.txs) visit(tx);
  if (include_pending)
    for (const auto& tx : ledger.pending()) visit(tx);
  return info;
}

Vote vote_from_body(const json& body, Tick ts) {
  return Vote{body.at("validator").get<std::string>(), body.at("module_id").get<std::string>(),
              verdict_from_string(body.at("verdict").get<std::string>()),
              digest_from_hex(body.at("validation_log_digest").get<std::string>()), ts};
}

}  // namespace

Receipt submit_for_certification(Ledger& ledger, const ValidationSubmission& submission,
                                 const ParticipantId& submitter, Tick now) {
  submission.validate();
  const auto previous = latest_round(ledger, submission.module_id, true);
  const std::uint64_t round = previous ? previous->round + 1 : 1;
  json body = {{"type", "submission"},
               {"module_id", submission.module_id},
               {"round", round},
               {"source_digest", to_hex(submission.source_digest)},
               {"build_digest", to_hex(submission.build_digest)},
               {"dataset_id", submission.dataset_id},
               {"requirements_id", submission.requirements_id},
               {"visibility", to_string(submission.visibility)}};
  return ledger.submit_transaction(Transaction::make(TxKind::Certification, submitter, std::move(body), now));
}

Receipt cast_vote(Ledger& ledger, const Vote& vote) {
  if (ledger.role_of(vote.validator_id) != Role::Validator)
    throw Error(ErrorCode::UnknownValidator, "'" + vote.validator_id + "' is not a registered validator");
  const auto round = latest_round(ledger, vote.module_id, true);
  if (!round) throw Error(ErrorCode::NotCertified, "no certification round open for '" + vote.module_id + "'");

  auto duplicate = [&](const Transaction& tx) {
    return is_cert_tx(tx, "vote", vote.module_id) && tx.body.at("round").get<std::uint64_t>() == round->round &&
           tx.body.at("validator").get<std::string>() == vote.validator_id;
  };
  for (const auto& b : ledger.blocks())
    for (const auto& tx : b.txs)
      if (duplicate(tx)) throw Error(ErrorCode::DuplicateVote, vote.validator_id + " already voted");
  for (const auto& tx : ledger.pending())
    if (duplicate(tx)) throw Error(ErrorCode::DuplicateVote, vote.validator_id + " already voted");

  json body = {{"type", "vote"},
               {"module_id", vote.module_id},
               {"round", round->round},
               {"validator", vote.validator_id},
               {"verdict", to_string(vote.verdict)},
               {"validation_log_digest", to_hex(vote.validation_log_digest)}};
  return ledger.submit_transaction(
      Transaction::make(TxKind::Certification, vote.validator_id, std::move(body), vote.cast_at));
}

namespace {

CertificationRecord record_from_body(const json& body) {
  CertificationRecord r;
  r.module_id = body.at("module_id").get<std::string>();
  r.round = body.at("round").get<std::uint64_t>();
  r.source_digest = digest_from_hex(body.at("source_digest").get<std::string>());
  r.build_digest = digest_from_hex(body.at("build_digest").get<std::string>());
  for (const auto& v : body.at("votes")) r.votes.push_back(vote_from_body(v, v.at("cast_at").get<Tick>()));
  r.status = certification_status_from_string(body.at("status").get<std::string>());
  r.decided_at = body.at("decided_at").get<Tick>();
  return r;
}

}  // namespace

std::optional<CertificationRecord> latest_certification_record(std::span<const Block> blocks,
                                                               const std::string& module_id) {
  std::optional<CertificationRecord> latest;
  for (const auto& b : blocks)
    for (const auto& tx : b.txs)
      if (is_cert_tx(tx, "record", module_id)) latest = record_from_body(tx.body);
  return latest;
}

CertificationRecord tally(Ledger& ledger, const std::string& module_id, const QuorumRule& rule, Tick now,
                          Tick voting_window) {
  const auto round = latest_round(ledger, module_id, false);
  if (!round) throw Error(ErrorCode::NotCertified, "no sealed certification round for '" + module_id + "'");
  if (auto existing = latest_certification_record(ledger.blocks(), module_id);
      existing && existing->round == round->round)
    return *existing;

  const auto validators = ledger.participants_with_role(Role::Validator);
  CertificationRecord record;
  record.module_id = module_id;
  record.round = round->round;
  record.source_digest = round->source;
  record.build_digest = round->build;
  for (const auto& b : ledger.blocks())
    for (const auto& tx : b.txs)
      if (is_cert_tx(tx, "vote", module_id) && tx.body.at("round").get<std::uint64_t>() == round->round)
        record.votes.push_back(vote_from_body(tx.body, tx.timestamp));

  if (record.votes.size() < validators.size() && now < round->opened_at + voting_window)
    throw Error(ErrorCode::VotingOpen, std::to_string(record.votes.size()) + "/" + std::to_string(validators.size()) +
                                           " votes, window closes at tick " +
                                           std::to_string(round->opened_at + voting_window));

  std::size_t certify = 0;
  for (const auto& v : record.votes) certify += v.verdict == Verdict::Certify ? 1 : 0;
  record.status = rule.certifies(certify, validators.size()) ? CertificationStatus::Certified
                                                             : CertificationStatus::Rejected;
  record.decided_at = now;

  json votes = json::array();
  for (const auto& v : record.votes)
    votes.push_back({{"validator", v.validator_id},
                     {"module_id", v.module_id},
                     {"verdict", to_string(v.verdict)},
                     {"validation_log_digest", to_hex(v.validation_log_digest)},
                     {"cast_at", v.cast_at}});
  json body = {{"type", "record"},
               {"module_id", module_id},
               {"round", record.round},
               {"source_digest", to_hex(record.source_digest)},
               {"build_digest", to_hex(record.build_digest)},
               {"votes", std::move(votes)},
               {"quorum", rule.to_string()},
               {"registered_validators", validators.size()},
               {"status", to_string(record.status)},
               {"decided_at", now}};
  const auto sequencers = ledger.participants_with_role(Role::Sequencer);
  const ParticipantId sender = sequencers.empty() ? round->submitter : sequencers.front();
  ledger.submit_transaction(Transaction::make(TxKind::Certification, sender, std::move(body), now));
  return record;
}

GateDecision deployment_gate(const Ledger& ledger, const std::string& module_id, const Digest& build_digest) {
  const auto record = latest_certification_record(ledger.blocks(), module_id);
  if (!record || record->status != CertificationStatus::Certified) return {false, DenyReason::NotCertified};
  if (!constant_time_equal(record->build_digest, build_digest)) return {false, DenyReason::DigestMismatch};
  return {true, DenyReason::None};
}

}  // namespace dcmb
