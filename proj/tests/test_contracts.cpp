#include "doctest.h"

#include <set>

#include "dcmb/contracts.hpp"
#include "dcmb/errors.hpp"
#include "dcmb/ledger.hpp"

using namespace dcmb;
using nlohmann::json;

namespace {

const ActionSpec kNotifyHigh{ActionKind::Notify, "machine_manufacturer", Importance::High, "service request"};

Ledger make_ledger() {
  Ledger l;
  l.register_participant("machine_owner", Role::MachineOwner);
  l.register_participant("machine_manufacturer", Role::MachineManufacturer);
  return l;
}

json maintenance_definition() {
  return json::parse(R"({
    "contract_id": "maintenance",
    "owner": "machine_manufacturer",
    "provisioning_salt": "fjpd7",
    "hash_params": "test",
    "conditions": [
      {"label": "Maintenance imminent", "action": "Notify", "target": "machine_manufacturer",
       "importance": "high", "message": "service request"}
    ]
  })");
}

const std::map<std::string, HashParams> kParams{{"test", HashParams::test()}};

}  // namespace

TEST_CASE("maintenance contract deploys and matches the hashed label") {
  Ledger l = make_ledger();
  const ContractDefinition def = parse_contract_definition(maintenance_definition(), kParams);
  const EqualityContract contract = build_contract(def);
  CHECK(deploy_contract(l, contract, CertificationStatus::Certified, 0) == "maintenance");
  REQUIRE(l.pending().size() == 1);
  CHECK(l.pending().front().kind == TxKind::Certification);
  // only the digest is recorded
  CHECK(l.pending().front().body.dump().find("Maintenance") == std::string::npos);

  const Bytes input = commit("Maintenance imminent", Salt::from_text("fjpd7"), HashParams::test()).hash;
  const auto action = evaluate(contract, input);
  REQUIRE(action);
  CHECK(*action == kNotifyHigh);
  CHECK(label_for_condition(def, 0) == "Maintenance imminent");
  CHECK_FALSE(label_for_condition(def, 1));

  const Digest random = sha256("random");
  CHECK_FALSE(evaluate(contract, random));
  // label committed under a different salt does not match
  CHECK_FALSE(evaluate(contract, commit("Maintenance imminent", Salt::from_text("other"), HashParams::test()).hash));
}

TEST_CASE("deploy_contract errors") {
  Ledger l = make_ledger();
  EqualityContract contract{"c1", "machine_manufacturer", {}, HashParams::test().id()};
  CHECK_THROWS_WITH_AS(deploy_contract(l, contract, CertificationStatus::Certified, 0),
                       doctest::Contains("EmptyConditionTable"), Error);

  const Digest d = sha256("x");
  contract.conditions.push_back(Condition{Bytes(d.begin(), d.end()), kNotifyHigh});
  CHECK_THROWS_WITH_AS(deploy_contract(l, contract, CertificationStatus::Rejected, 0),
                       doctest::Contains("NotCertified"), Error);
  CHECK_THROWS_AS(deploy_contract(l, contract, CertificationStatus::Pending, 0), Error);

  CHECK_NOTHROW(deploy_contract(l, contract, CertificationStatus::Certified, 0));
  CHECK_THROWS_WITH_AS(deploy_contract(l, contract, CertificationStatus::Certified, 0),
                       doctest::Contains("DuplicateContract"), Error);

  EqualityContract dup{"c2", "machine_manufacturer", contract.conditions, HashParams::test().id()};
  dup.conditions.push_back(contract.conditions[0]);
  CHECK_THROWS_WITH_AS(deploy_contract(l, dup, CertificationStatus::Certified, 0),
                       doctest::Contains("DuplicateCondition"), Error);

  EqualityContract stranger{"c3", "nobody", contract.conditions, HashParams::test().id()};
  CHECK_THROWS_WITH_AS(deploy_contract(l, stranger, CertificationStatus::Certified, 0),
                       doctest::Contains("UnknownSender"), Error);
}

TEST_CASE("third condition matches and agrees with a linear scan") {
  EqualityContract contract{"c", "machine_manufacturer", {}, HashParams::test().id()};
  for (int i = 0; i < 3; ++i) {
    const Digest d = sha256("label-" + std::to_string(i));
    contract.conditions.push_back(Condition{
        Bytes(d.begin(), d.end()),
        ActionSpec{ActionKind::EmitEvent, "machine_owner", Importance::Normal, "event-" + std::to_string(i)}});
  }
  const Bytes input = contract.conditions[2].stored_hash;
  const auto action = evaluate(contract, input);
  REQUIRE(action);
  CHECK(action->message == "event-2");

  std::optional<std::size_t> scan;
  for (std::size_t i = 0; i < contract.conditions.size(); ++i)
    if (contract.conditions[i].stored_hash == input && !scan) scan = i;
  CHECK(match_condition(contract, input) == scan);
}

TEST_CASE("at most one match across random inputs") {
  EqualityContract contract{"c", "machine_manufacturer", {}, HashParams::test().id()};
  for (int i = 0; i < 3; ++i) {
    const Digest d = sha256("cond-" + std::to_string(i));
    contract.conditions.push_back(Condition{Bytes(d.begin(), d.end()), kNotifyHigh});
  }
  DeterministicRandom rng(2024);
  int matched = 0;
  for (int i = 0; i < 10000; ++i) {
    Bytes input(32);
    if (i % 100 == 0) {
      input = contract.conditions[rng.uniform(3)].stored_hash;
    } else {
      rng.fill(input);
    }
    int hits = 0;
    for (const auto& c : contract.conditions) hits += (c.stored_hash == input) ? 1 : 0;
    CHECK(hits <= 1);
    CHECK(evaluate(contract, input).has_value() == (hits == 1));
    matched += hits;
  }
  CHECK(matched == 100);
}

TEST_CASE("only equality predicates can be configured") {
  for (const char* key : {"lower", "upper", "less_than", "greater_than", "min", "max", "range"}) {
    json def = maintenance_definition();
    def["conditions"][0][key] = 5300;
    CHECK_THROWS_WITH_AS(parse_contract_definition(def, kParams), doctest::Contains("UnsupportedPredicate"), Error);
  }
  json def = maintenance_definition();
  def["conditions"][0]["predicate"] = "greater_than";
  CHECK_THROWS_WITH_AS(parse_contract_definition(def, kParams), doctest::Contains("UnsupportedPredicate"), Error);

  def = maintenance_definition();
  def["conditions"][0]["predicate"] = "equals";
  CHECK_NOTHROW(parse_contract_definition(def, kParams));

  def = maintenance_definition();
  def["conditions"][0]["colour"] = "red";
  CHECK_THROWS_WITH_AS(parse_contract_definition(def, kParams), doctest::Contains("ConfigInvalid"), Error);

  def = maintenance_definition();
  def["hash_params"] = "missing";
  CHECK_THROWS_AS(parse_contract_definition(def, kParams), Error);

  def = maintenance_definition();
  def["provisioning_salt"] = json{{"hex", "666a706437"}};
  CHECK(parse_contract_definition(def, kParams).provisioning_salt == Salt::from_text("fjpd7"));

  def = maintenance_definition();
  def["conditions"][0]["message"] = "Maintenance imminent";
  CHECK_THROWS_AS(parse_contract_definition(def, kParams), Error);
}

TEST_CASE("dictionary attack on the condition table fails without the true label") {
  // Cheap parameters keep 10,000 guesses fast; the property is about the table, not the cost.
  const HashParams cheap{Argon2Variant::id, 8, 1, 1, 32};
  ContractDefinition def;
  def.contract_id = "maintenance";
  def.owner_id = "machine_manufacturer";
  def.provisioning_salt = Salt::from_text("fjpd7");
  def.params = cheap;
  def.conditions.push_back(LabelCondition{"Maintenance imminent", kNotifyHigh});
  const EqualityContract contract = build_contract(def);

  const std::vector<std::string> stems{"maintenance", "service", "repair", "inspection", "order", "pending",
                                       "imminent",    "urgent",  "soon",   "week",       "month", "day"};
  std::size_t guesses = 0;
  for (std::size_t i = 0; guesses < 10000; ++i) {
    std::string word = stems[i % stems.size()] + (i >= stems.size() ? std::to_string(i / stems.size()) : "");
    if (word == "Maintenance imminent") continue;
    ++guesses;
    CHECK_FALSE(evaluate(contract, commit(word, def.provisioning_salt, cheap).hash));
  }
  CHECK(evaluate(contract, commit("Maintenance imminent", def.provisioning_salt, cheap).hash));
}

TEST_CASE("receiver_dispatch") {
  const HashParams p = HashParams::test();
  DeterministicRandom rng(5);
  const Salt salt = generate_salt(rng);
  const ActionSpec order{ActionKind::InitiateOrder, "machine_manufacturer", Importance::Normal, "order service"};
  const ActionSpec other{ActionKind::EmitEvent, "machine_manufacturer", Importance::Low, "other"};

  const std::vector<ReceiverCandidate> two{{to_bytes("order_batch_A"), order}, {to_bytes("order_batch_B"), other}};
  const Commitment evidence = commit("order_batch_A", salt, p);
  CHECK(receiver_dispatch(evidence, two, p) == order);
  CHECK_FALSE(receiver_dispatch(evidence, {}, p));
  CHECK_FALSE(receiver_dispatch(commit("order_batch_Z", salt, p), two, p));

  std::vector<ReceiverCandidate> fifty;
  for (int i = 0; i < 50; ++i) {
    Bytes payload(12);
    rng.fill(payload);
    fifty.push_back({payload, ActionSpec{ActionKind::EmitEvent, "machine_owner", Importance::Low,
                                         "candidate-" + std::to_string(i)}});
  }
  const Commitment c37 = commit(fifty[37].payload, salt, p);
  const auto chosen = receiver_dispatch(c37, fifty, p);
  REQUIRE(chosen);
  CHECK(chosen->message == "candidate-37");
  int verifying = 0;
  for (const auto& cand : fifty) verifying += verify(c37, cand.payload, p) ? 1 : 0;
  CHECK(verifying == 1);
}
