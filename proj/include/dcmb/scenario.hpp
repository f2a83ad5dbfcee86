#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmb/certification.hpp"
#include "dcmb/contracts.hpp"
#include "dcmb/dcmb_module.hpp"
#include "dcmb/ledger.hpp"
#include "dcmb/p2p.hpp"

namespace dcmb {

/// Integer random walk: each record moves by a uniform step in [-max_step, max_step].
struct RandomWalk {
  double start = 0;
  std::uint64_t max_step = 1;
  std::size_t per_period = 1;
  std::size_t periods = 1;
};

/// Records per collection period. scripted[k] feeds period k.
struct DataSeries {
  std::vector<std::vector<double>> scripted;
  std::optional<RandomWalk> random_walk;
};

struct ModuleSpec {
  ModuleConfig config;
  std::string source;  // artifact whose digest is submitted for certification
  DataSeries data;
};

struct ChannelSpec {
  ParticipantId from;
  ParticipantId to;
  CachePolicy policy;
};

/// Channel is partitioned for ticks in [from_tick, to_tick).
struct PartitionWindow {
  ParticipantId from;
  ParticipantId to;
  Tick from_tick = 0;
  Tick to_tick = 0;
};

struct CertificationRound {
  std::string subject;  // module or contract id
  std::string dataset;
  std::string requirements;
  std::vector<std::string> checks;  // empty selects the defaults for the subject
  Visibility visibility = Visibility::ValidatorsOnly;
};

struct CertificationSettings {
  QuorumRule quorum;
  Tick voting_window = 10;
  std::vector<CertificationRound> rounds;
};

struct ScenarioConfig {
  std::vector<std::pair<ParticipantId, Role>> participants;
  std::map<std::string, HashParams> hash_params;
  LedgerConfig ledger;
  std::vector<ModuleSpec> modules;
  std::vector<ContractDefinition> contracts;
  std::vector<ChannelSpec> channels;
  std::vector<PartitionWindow> partitions;
  CertificationSettings certification;
  std::map<std::string, std::vector<double>> datasets;
  CachePolicy default_channel_policy;
  Tick total_ticks = 1;
  std::uint64_t rng_seed = 0;
  /// Waives the fresh-salt check so a fixed audit salt can replay the
  /// single-salt walkthrough literally.
  bool paper_faithful = false;

  /// Parses and validates. Throws Error(ConfigInvalid) on unknown keys,
  /// dangling references or bad values.
  static ScenarioConfig from_json(const nlohmann::json& j);
  static ScenarioConfig load(const std::string& path);

  void validate() const;
  const ModuleSpec* find_module(const std::string& module_id) const;
  const ContractDefinition* find_contract(const std::string& contract_id) const;
};

struct NotificationRecord {
  Tick tick = 0;
  std::string contract_id;
  std::size_t condition_index = 0;
  ActionSpec action;
  std::string outcome;  // send outcome on the notification channel, or "local" for non-Notify actions
};

struct AuditResult {
  Disclosure disclosure;
  bool verified = false;
  std::optional<std::uint64_t> block_height;
};

struct CertificationSummary {
  std::string subject;
  std::uint64_t round = 0;
  CertificationStatus status = CertificationStatus::Pending;
  std::size_t certify_votes = 0;
  std::size_t votes = 0;
  std::vector<std::string> waived_checks;
};

struct RunReport {
  std::uint64_t rng_seed = 0;
  Tick total_ticks = 0;
  bool paper_faithful = false;
  std::size_t records = 0;
  std::size_t p2p_sent = 0;
  std::size_t p2p_delivered = 0;
  std::size_t p2p_dropped_full = 0;
  std::size_t p2p_dropped_timeout = 0;
  std::size_t data_sent = 0;
  std::size_t data_delivered = 0;
  std::size_t evidence_txs = 0;
  std::size_t contract_inputs = 0;
  std::size_t contract_events = 0;
  std::size_t blocks = 0;
  std::vector<CertificationSummary> certifications;
  std::vector<NotificationRecord> notifications;
  std::size_t audit_verified = 0;
  std::size_t audit_total = 0;
  bool chain_ok = false;
  std::string event_log;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct RunResult {
  RunReport report;
  Ledger ledger;
  Network network;
  std::vector<nlohmann::json> events;
  std::vector<Disclosure> disclosures;
};

/// Deterministic end-to-end run. Certification happens first; any module or
/// contract refused by the deployment gate aborts with Error(GateDenied)
/// before the first data tick.
RunResult run_scenario(const ScenarioConfig& config);

/// Writes ledger.ndjson, report.json, report.txt, events.ndjson and
/// disclosures.json into `out_dir`.
void write_run_outputs(const RunResult& result, const std::filesystem::path& out_dir);

nlohmann::json disclosures_to_json(std::span<const Disclosure> disclosures);
/// Accepts {payload|payload_hex, salt|salt_hex} entries, as a bare array or under "disclosures".
std::vector<Disclosure> disclosures_from_json(const nlohmann::json& j);

/// Checks each disclosed (payload, salt) against the Evidence commitments
/// of a serialized ledger. Throws Error(ChainInvalid) if the chain fails.
std::vector<AuditResult> verify_audit(std::string_view ledger_ndjson, std::span<const Disclosure> disclosures);

struct CertifyOutcome {
  CertificationRecord record;
  ValidationLog log;
  Ledger ledger;
};

/// Runs one certification round for `subject_id` on a fresh ledger built from
/// the scenario's participants.
CertifyOutcome certify_subject(const ScenarioConfig& config, const std::string& subject_id);

/// Signing key derived from the key name; stands in for a provisioned key store.
SigningKey signing_key_for(const std::string& key_name);

}  // namespace dcmb
