#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmb/contracts.hpp"
#include "dcmb/crypto.hpp"
#include "dcmb/ledger.hpp"
#include "dcmb/types.hpp"

namespace dcmb {

struct ModuleConfig;

enum class Verdict { Certify, Reject };
enum class Visibility { Public, ValidatorsOnly };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);
std::string_view to_string(Visibility v);
Visibility visibility_from_string(std::string_view s);

/// Simulated build: a deterministic digest of the module's declared
/// configuration and behaviour profile.
Digest module_build_digest(const ModuleConfig& config);
Digest contract_build_digest(const EqualityContract& contract);
Digest source_digest(std::string_view source);

struct ValidationSubmission {
  std::string module_id;
  Digest source_digest{};
  Digest build_digest{};
  std::string dataset_id;
  std::string requirements_id;
  Visibility visibility = Visibility::ValidatorsOnly;

  void validate() const;
};

/// Whether `who` may fetch the submitted source. Private sources go to the
/// validator group only; public ones also to the module owner and its peer.
bool can_fetch_source(const ValidationSubmission& submission, Role who_role, const ParticipantId& who,
                      const ParticipantId& owner, const ParticipantId& peer);

struct Vote {
  ParticipantId validator_id;
  std::string module_id;
  Verdict verdict = Verdict::Reject;
  Digest validation_log_digest{};
  Tick cast_at = 0;
};

struct CertificationRecord {
  std::string module_id;
  std::uint64_t round = 0;
  Digest source_digest{};
  Digest build_digest{};
  std::vector<Vote> votes;
  CertificationStatus status = CertificationStatus::Pending;
  Tick decided_at = 0;
};

struct QuorumRule {
  enum class Kind { StrictMajority, Unanimous, AtLeast };
  Kind kind = Kind::StrictMajority;
  std::size_t threshold = 0;  // used by AtLeast

  /// Ties reject under StrictMajority.
  bool certifies(std::size_t certify_votes, std::size_t registered_validators) const;

  static QuorumRule parse(std::string_view text);
  std::string to_string() const;
};

struct ValidationCheck {
  std::string check_id;
  std::string description;
};

/// Checks understood by run_validation, in their default order.
std::vector<ValidationCheck> default_module_checks();
std::vector<ValidationCheck> default_contract_checks();
ValidationCheck check_by_id(std::string_view check_id);

struct CheckOutcome {
  std::string check_id;
  bool passed = false;
  std::string detail;
};

struct ValidationLog {
  std::string subject_id;
  std::vector<CheckOutcome> outcomes;

  nlohmann::json to_json() const;
  Digest digest() const;
};

struct ValidationResult {
  Verdict verdict = Verdict::Reject;
  ValidationLog log;
};

/// Runs a fresh build of the module over the dataset and evaluates every
/// check. The verdict is certify iff all checks pass. Depends only on its
/// arguments, so independent validators reach identical verdicts.
/// Throws DatasetMissing for an empty dataset or check list.
ValidationResult run_validation(const ModuleConfig& module_under_test, std::span<const double> dataset,
                                std::span<const ValidationCheck> checks);

/// Contract counterpart: verifies that only digests would reach the chain.
ValidationResult run_contract_validation(const ContractDefinition& definition, std::span<const ValidationCheck> checks);

/// Opens a certification round by recording the submission on-chain.
Receipt submit_for_certification(Ledger& ledger, const ValidationSubmission& submission, const ParticipantId& submitter,
                                 Tick now);

/// Throws UnknownValidator, DuplicateVote, or NotCertified when no round is open.
Receipt cast_vote(Ledger& ledger, const Vote& vote);

/// Counts sealed votes of the module's latest round and persists the outcome.
/// Throws VotingOpen while votes are incomplete and now < opened_at + window.
CertificationRecord tally(Ledger& ledger, const std::string& module_id, const QuorumRule& rule, Tick now,
                          Tick voting_window = 10);

/// Latest persisted record for `module_id` in sealed blocks.
std::optional<CertificationRecord> latest_certification_record(std::span<const Block> blocks,
                                                               const std::string& module_id);

enum class DenyReason { None, NotCertified, DigestMismatch };
std::string_view to_string(DenyReason r);

struct GateDecision {
  bool allowed = false;
  DenyReason reason = DenyReason::NotCertified;
};

GateDecision deployment_gate(const Ledger& ledger, const std::string& module_id, const Digest& build_digest);

}  // namespace dcmb
