#include "dcmb/contracts.hpp"

#include <set>

#include "dcmb/errors.hpp"
#include "dcmb/ledger.hpp"

namespace dcmb {

using nlohmann::json;

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Notify: return "Notify";
    case ActionKind::EmitEvent: return "EmitEvent";
    case ActionKind::InitiateOrder: return "InitiateOrder";
  }
  return "Unknown";
}

std::string_view to_string(Importance i) {
  switch (i) {
    case Importance::Low: return "low";
    case Importance::Normal: return "normal";
    case Importance::High: return "high";
  }
  return "unknown";
}

ActionKind action_kind_from_string(std::string_view s) {
  for (ActionKind k : {ActionKind::Notify, ActionKind::EmitEvent, ActionKind::InitiateOrder})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::ConfigInvalid, "unknown action kind '" + std::string(s) + "'");
}

Importance importance_from_string(std::string_view s) {
  for (Importance i : {Importance::Low, Importance::Normal, Importance::High})
    if (to_string(i) == s) return i;
  throw Error(ErrorCode::ConfigInvalid, "unknown importance '" + std::string(s) + "'");
}

json to_json(const ActionSpec& a) {
  return json{{"kind", to_string(a.kind)},
              {"target", a.target_id},
              {"importance", to_string(a.importance)},
              {"message", a.message}};
}

ActionSpec action_from_json(const json& j) {
  ActionSpec a;
  a.kind = action_kind_from_string(j.at("kind").get<std::string>());
  a.target_id = j.at("target").get<std::string>();
  a.importance = importance_from_string(j.at("importance").get<std::string>());
  a.message = j.value("message", "");
  return a;
}

std::optional<std::size_t> match_condition(const EqualityContract& contract, ByteView transaction_value) {
  for (std::size_t i = 0; i < contract.conditions.size(); ++i) {
    if (constant_time_equal(contract.conditions[i].stored_hash, transaction_value)) return i;
  }
  return std::nullopt;
}

std::optional<ActionSpec> evaluate(const EqualityContract& contract, ByteView transaction_value) {
  if (auto i = match_condition(contract, transaction_value)) return contract.conditions[*i].action;
  return std::nullopt;
}

std::string deploy_contract(Ledger& ledger, const EqualityContract& contract, CertificationStatus cert_status,
                            Tick now) {
  if (contract.conditions.empty())
    throw Error(ErrorCode::EmptyConditionTable, "contract '" + contract.contract_id + "' has no conditions");
  std::set<Bytes> seen;
  for (const auto& c : contract.conditions) {
    if (!seen.insert(c.stored_hash).second)
      throw Error(ErrorCode::DuplicateCondition, "contract '" + contract.contract_id + "' repeats a stored digest");
    if (!ledger.is_registered(c.action.target_id))
      throw Error(ErrorCode::UnknownSender, "action target '" + c.action.target_id + "' is not registered");
  }
  if (!ledger.is_registered(contract.owner_id))
    throw Error(ErrorCode::UnknownSender, "contract owner '" + contract.owner_id + "' is not registered");
  if (ledger.find_contract(contract.contract_id))
    throw Error(ErrorCode::DuplicateContract, "contract '" + contract.contract_id + "' already deployed");
  if (cert_status != CertificationStatus::Certified)
    throw Error(ErrorCode::NotCertified,
                "contract '" + contract.contract_id + "' status is " + std::string(to_string(cert_status)));

  json conditions = json::array();
  for (const auto& c : contract.conditions)
    conditions.push_back({{"stored_hash", to_hex(c.stored_hash)}, {"action", to_json(c.action)}});
  json body = {{"type", "contract_deployment"},
               {"contract_id", contract.contract_id},
               {"owner", contract.owner_id},
               {"params_id", contract.params_id},
               {"conditions", std::move(conditions)}};
  ledger.submit_transaction(Transaction::make(TxKind::Certification, contract.owner_id, std::move(body), now));
  ledger.register_contract(contract);
  return contract.contract_id;
}

Salt salt_from_json(const json& j) {
  if (j.is_string()) return Salt::from_text(j.get<std::string>());
  if (j.is_object() && j.contains("hex")) return Salt{from_hex(j.at("hex").get<std::string>())};
  if (j.is_object() && j.contains("text")) return Salt::from_text(j.at("text").get<std::string>());
  throw Error(ErrorCode::ConfigInvalid, "salt must be a UTF-8 string or {\"hex\": ...}");
}

namespace {

bool is_range_key(std::string_view key) {
  static const std::set<std::string_view> kRange{"lower", "upper", "min",       "max",          "lt",
                                                 "gt",    "le",    "ge",        "range",        "less_than",
                                                 "greater_than",   "threshold", "between"};
  return kRange.contains(key);
}

}  // namespace

ContractDefinition parse_contract_definition(const json& j, const std::map<std::string, HashParams>& params_by_name) {
  try {
    ContractDefinition def;
    def.contract_id = j.at("contract_id").get<std::string>();
    def.owner_id = j.at("owner").get<std::string>();
    def.provisioning_salt = salt_from_json(j.at("provisioning_salt"));
    if (def.provisioning_salt.bytes.empty()) throw Error(ErrorCode::ConfigInvalid, "provisioning salt is empty");
    const std::string params_name = j.value("hash_params", "test");
    auto pit = params_by_name.find(params_name);
    if (pit == params_by_name.end())
      throw Error(ErrorCode::ConfigInvalid, "unknown hash params '" + params_name + "'");
    def.params = pit->second;

    static const std::set<std::string_view> kAllowed{"label", "action", "target", "importance", "message",
                                                     "predicate"};
    for (const auto& c : j.at("conditions")) {
      for (const auto& [key, value] : c.items()) {
        if (is_range_key(key))
          throw Error(ErrorCode::UnsupportedPredicate,
                      "contract '" + def.contract_id + "': '" + key + "' is not expressible; only equality is supported");
        if (!kAllowed.contains(key))
          throw Error(ErrorCode::ConfigInvalid, "contract '" + def.contract_id + "': unknown condition key '" + key + "'");
      }
      const std::string predicate = c.value("predicate", "equals");
      if (predicate != "equals")
        throw Error(ErrorCode::UnsupportedPredicate,
                    "contract '" + def.contract_id + "': predicate '" + predicate + "' is not supported");
      LabelCondition lc;
      lc.label = c.at("label").get<std::string>();
      if (lc.label.empty()) throw Error(ErrorCode::ConfigInvalid, "empty condition label");
      lc.action.kind = action_kind_from_string(c.value("action", "Notify"));
      lc.action.target_id = c.at("target").get<std::string>();
      lc.action.importance = importance_from_string(c.value("importance", "normal"));
      lc.action.message = c.value("message", "");
      if (lc.action.message == lc.label)
        throw Error(ErrorCode::ConfigInvalid, "contract '" + def.contract_id + "': action message repeats the label");
      def.conditions.push_back(std::move(lc));
    }
    return def;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("contract definition: ") + e.what());
  }
}

EqualityContract build_contract(const ContractDefinition& def) {
  EqualityContract c;
  c.contract_id = def.contract_id;
  c.owner_id = def.owner_id;
  c.params_id = def.params.id();
  for (const auto& lc : def.conditions) {
    c.conditions.push_back(Condition{commit(lc.label, def.provisioning_salt, def.params).hash, lc.action});
  }
  return c;
}

std::optional<std::string> label_for_condition(const ContractDefinition& def, std::size_t index) {
  if (index >= def.conditions.size()) return std::nullopt;
  return def.conditions[index].label;
}

std::optional<ActionSpec> receiver_dispatch(const Commitment& evidence, std::span<const ReceiverCandidate> candidates,
                                            const HashParams& params) {
  for (const auto& cand : candidates) {
    if (verify(evidence, cand.payload, params)) return cand.action;
  }
  return std::nullopt;
}

}  // namespace dcmb
