#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcmb/bytes.hpp"
#include "dcmb/commitment.hpp"
#include "dcmb/types.hpp"

namespace dcmb {

class Ledger;

enum class ActionKind { Notify, EmitEvent, InitiateOrder };
enum class Importance { Low, Normal, High };

std::string_view to_string(ActionKind k);
std::string_view to_string(Importance i);
ActionKind action_kind_from_string(std::string_view s);
Importance importance_from_string(std::string_view s);

struct ActionSpec {
  ActionKind kind = ActionKind::Notify;
  ParticipantId target_id;
  Importance importance = Importance::Normal;
  std::string message;

  bool operator==(const ActionSpec&) const = default;
};

nlohmann::json to_json(const ActionSpec& a);
ActionSpec action_from_json(const nlohmann::json& j);

struct Condition {
  Bytes stored_hash;
  ActionSpec action;
};

/// A contract whose only predicate is digest equality. There is deliberately
/// no way to express ordering, arithmetic or ranges over inputs.
struct EqualityContract {
  std::string contract_id;
  ParticipantId owner_id;
  std::vector<Condition> conditions;
  std::string params_id;
};

/// Index of the first condition whose stored digest equals `transaction_value`.
std::optional<std::size_t> match_condition(const EqualityContract& contract, ByteView transaction_value);

std::optional<ActionSpec> evaluate(const EqualityContract& contract, ByteView transaction_value);

/// Registers `contract` in the ledger's registry and records the deployment as
/// a Certification transaction. Only condition digests reach the ledger.
/// Throws EmptyConditionTable, DuplicateCondition, DuplicateContract,
/// UnknownSender (owner or action target not registered) and NotCertified.
std::string deploy_contract(Ledger& ledger, const EqualityContract& contract, CertificationStatus cert_status,
                            Tick now);

/// Plaintext side of a contract, held off-chain by its owner and the
/// authorized sender.
struct LabelCondition {
  std::string label;
  ActionSpec action;
};

struct ContractDefinition {
  std::string contract_id;
  ParticipantId owner_id;
  Salt provisioning_salt;
  HashParams params;
  std::vector<LabelCondition> conditions;
};

/// Salt given as a UTF-8 string, {"text": ...} or {"hex": ...}.
Salt salt_from_json(const nlohmann::json& j);

/// Parses a contract definition. Conditions accept only {label, action,
/// target, importance, message, predicate:"equals"}; range or inequality
/// predicates raise UnsupportedPredicate. `params_by_name` resolves the
/// optional "hash_params" reference.
ContractDefinition parse_contract_definition(const nlohmann::json& j,
                                             const std::map<std::string, HashParams>& params_by_name);

/// Computes commit(label, provisioning_salt) for every condition.
EqualityContract build_contract(const ContractDefinition& def);

/// Label lookup for display by the contract owner; never written on-chain.
std::optional<std::string> label_for_condition(const ContractDefinition& def, std::size_t index);

struct ReceiverCandidate {
  Bytes payload;
  ActionSpec action;
};

/// Off-chain counterpart of evaluate(): the receiving partner checks the
/// evidence against payloads it already knows, in order.
std::optional<ActionSpec> receiver_dispatch(const Commitment& evidence, std::span<const ReceiverCandidate> candidates,
                                            const HashParams& params);

}  // namespace dcmb
