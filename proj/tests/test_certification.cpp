#include "doctest.h"

#include "dcmb/certification.hpp"
#include "dcmb/dcmb_module.hpp"
#include "dcmb/errors.hpp"

using namespace dcmb;
using nlohmann::json;

namespace {

const std::vector<std::string> kValidators{"validator_a", "validator_b", "validator_c"};

Ledger make_ledger(std::size_t validators = 3) {
  Ledger l;
  l.register_participant("machine_owner", Role::MachineOwner);
  l.register_participant("machine_manufacturer", Role::MachineManufacturer);
  l.register_participant("sequencer", Role::Sequencer);
  for (std::size_t i = 0; i < validators; ++i) l.register_participant(kValidators[i], Role::Validator);
  return l;
}

ModuleConfig module_config(ModuleBehavior behavior = ModuleBehavior::Compliant) {
  ModuleConfig c;
  c.module_id = "dcmb-owner";
  c.owner_id = "machine_owner";
  c.peer_id = "machine_manufacturer";
  c.batch_size = 2;
  c.mapping = IntervalMapping::create({{5300, 5400, "Maintenance imminent"}});
  c.contract = ContractBinding{"maintenance", Salt::from_text("fjpd7"), HashParams::test()};
  c.signing_key = "owner-key";
  c.behavior = behavior;
  return c;
}

const std::vector<double> kDataset{5367, 5210.5, 5300, 42};

ValidationSubmission submission_for(const ModuleConfig& c) {
  return ValidationSubmission{c.module_id, source_digest("module source"), module_build_digest(c), "confidentiality-v1",
                              "requirements-v1", Visibility::ValidatorsOnly};
}

CertificationRecord run_round(Ledger& l, const ModuleConfig& c, const std::vector<Verdict>& verdicts) {
  submit_for_certification(l, submission_for(c), "machine_owner", 0);
  l.seal_block(0);
  for (std::size_t i = 0; i < verdicts.size(); ++i)
    cast_vote(l, Vote{kValidators[i], c.module_id, verdicts[i], sha256("log"), 1});
  l.seal_block(1);
  const auto record = tally(l, c.module_id, QuorumRule{}, 20);
  l.seal_block(20);
  return record;
}

}  // namespace

TEST_CASE("compliant module is certified by run_validation") {
  const auto result = run_validation(module_config(), kDataset, default_module_checks());
  CHECK(result.verdict == Verdict::Certify);
  REQUIRE(result.log.outcomes.size() == 4);
  for (const auto& o : result.log.outcomes) CHECK_MESSAGE(o.passed, o.check_id << ": " << o.detail);
}

TEST_CASE("planted leak is rejected and the log names the check") {
  const auto result = run_validation(module_config(ModuleBehavior::PlantedLeak), kDataset, default_module_checks());
  CHECK(result.verdict == Verdict::Reject);
  bool named = false;
  for (const auto& o : result.log.outcomes)
    if (o.check_id == "no_raw_payload_on_ledger") named = !o.passed;
  CHECK(named);
  CHECK(result.log.to_json().dump().find("no_raw_payload_on_ledger") != std::string::npos);
}

TEST_CASE("fixed audit salt fails the fresh salt check") {
  ModuleConfig c = module_config();
  c.fixed_salt = Salt::from_text("fjpd7");
  const auto result = run_validation(c, kDataset, std::vector<ValidationCheck>{check_by_id("fresh_salt_usage")});
  CHECK(result.verdict == Verdict::Reject);
}

TEST_CASE("missing signing key fails validation") {
  ModuleConfig c = module_config();
  c.signing_key.clear();
  const auto result = run_validation(c, kDataset, default_module_checks());
  CHECK(result.verdict == Verdict::Reject);
}

TEST_CASE("validation errors") {
  CHECK_THROWS_WITH_AS(run_validation(module_config(), kDataset, {}), doctest::Contains("DatasetMissing"), Error);
  CHECK_THROWS_WITH_AS(run_validation(module_config(), {}, default_module_checks()),
                       doctest::Contains("DatasetMissing"), Error);
  CHECK_THROWS_WITH_AS(check_by_id("telepathy"), doctest::Contains("ConfigInvalid"), Error);
  CHECK_THROWS_AS(run_validation(module_config(), kDataset, default_contract_checks()), Error);
}

TEST_CASE("independent validators reach identical verdicts") {
  for (auto behavior : {ModuleBehavior::Compliant, ModuleBehavior::PlantedLeak}) {
    const auto a = run_validation(module_config(behavior), kDataset, default_module_checks());
    const auto b = run_validation(module_config(behavior), kDataset, default_module_checks());
    CHECK(a.verdict == b.verdict);
    CHECK(a.log.digest() == b.log.digest());
  }
}

TEST_CASE("contract validation") {
  ContractDefinition def;
  def.contract_id = "maintenance";
  def.owner_id = "machine_manufacturer";
  def.provisioning_salt = Salt::from_text("fjpd7");
  def.params = HashParams::test();
  def.conditions.push_back(
      LabelCondition{"Maintenance imminent", {ActionKind::Notify, "machine_manufacturer", Importance::High, "service request"}});
  CHECK(run_contract_validation(def, default_contract_checks()).verdict == Verdict::Certify);

  def.conditions.push_back(def.conditions[0]);
  const auto dup = run_contract_validation(def, default_contract_checks());
  CHECK(dup.verdict == Verdict::Reject);

  def.conditions.pop_back();
  def.conditions[0].action.message = "Maintenance imminent soon";
  CHECK(run_contract_validation(def, default_contract_checks()).verdict == Verdict::Reject);
}

TEST_CASE("quorum arithmetic") {
  const QuorumRule majority;
  CHECK(majority.certifies(2, 3));
  CHECK_FALSE(majority.certifies(1, 3));
  CHECK_FALSE(majority.certifies(2, 4));
  CHECK(majority.certifies(1, 1));
  CHECK_FALSE(majority.certifies(0, 0));
  CHECK(QuorumRule::parse("unanimous").certifies(3, 3));
  CHECK_FALSE(QuorumRule::parse("unanimous").certifies(2, 3));
  CHECK(QuorumRule::parse("at_least:2").certifies(2, 5));
  CHECK(QuorumRule::parse("at_least:2").to_string() == "at_least:2");
  CHECK_THROWS_AS(QuorumRule::parse("at_least:0"), Error);
  CHECK_THROWS_AS(QuorumRule::parse("most"), Error);
}

TEST_CASE("tally over three validators") {
  {
    Ledger l = make_ledger();
    const auto r = run_round(l, module_config(), {Verdict::Certify, Verdict::Certify, Verdict::Reject});
    CHECK(r.status == CertificationStatus::Certified);
    CHECK(r.votes.size() == 3);
  }
  {
    Ledger l = make_ledger();
    const auto r = run_round(l, module_config(), {Verdict::Certify, Verdict::Reject, Verdict::Reject});
    CHECK(r.status == CertificationStatus::Rejected);
  }
  {
    Ledger l = make_ledger(1);
    const auto r = run_round(l, module_config(), {Verdict::Certify});
    CHECK(r.status == CertificationStatus::Certified);
  }
}

TEST_CASE("votes and the record are retrievable from the chain") {
  Ledger l = make_ledger();
  const ModuleConfig c = module_config();
  run_round(l, c, {Verdict::Certify, Verdict::Certify, Verdict::Certify});

  int votes = 0;
  for (const auto& b : l.blocks())
    for (const auto& tx : b.txs)
      if (tx.kind == TxKind::Certification && tx.body.at("type") == "vote") ++votes;
  CHECK(votes == 3);

  // a third party rebuilds the trail from the serialized ledger alone
  const std::vector<Block> parsed = parse_ledger(l.to_ndjson());
  const auto record = latest_certification_record(parsed, c.module_id);
  REQUIRE(record);
  CHECK(record->status == CertificationStatus::Certified);
  CHECK(record->source_digest == source_digest("module source"));
  CHECK(record->build_digest == module_build_digest(c));
  CHECK(record->votes.size() == 3);
  CHECK(record->decided_at == 20);
}

TEST_CASE("vote errors") {
  Ledger l = make_ledger();
  const ModuleConfig c = module_config();
  CHECK_THROWS_AS(cast_vote(l, Vote{"validator_a", c.module_id, Verdict::Certify, {}, 0}), Error);

  submit_for_certification(l, submission_for(c), "machine_owner", 0);
  CHECK_NOTHROW(cast_vote(l, Vote{"validator_a", c.module_id, Verdict::Certify, {}, 0}));
  CHECK_THROWS_WITH_AS(cast_vote(l, Vote{"validator_a", c.module_id, Verdict::Reject, {}, 0}),
                       doctest::Contains("DuplicateVote"), Error);
  l.seal_block(0);
  CHECK_THROWS_WITH_AS(cast_vote(l, Vote{"validator_a", c.module_id, Verdict::Reject, {}, 1}),
                       doctest::Contains("DuplicateVote"), Error);
  CHECK_THROWS_WITH_AS(cast_vote(l, Vote{"machine_owner", c.module_id, Verdict::Certify, {}, 1}),
                       doctest::Contains("UnknownValidator"), Error);
  CHECK_THROWS_WITH_AS(cast_vote(l, Vote{"ghost", c.module_id, Verdict::Certify, {}, 1}),
                       doctest::Contains("UnknownValidator"), Error);

  ValidationSubmission zero = submission_for(c);
  zero.build_digest = Digest{};
  CHECK_THROWS_AS(submit_for_certification(l, zero, "machine_owner", 0), Error);
}

TEST_CASE("tally waits for the voting window") {
  Ledger l = make_ledger();
  const ModuleConfig c = module_config();
  CHECK_THROWS_WITH_AS(tally(l, c.module_id, QuorumRule{}, 0), doctest::Contains("NotCertified"), Error);
  submit_for_certification(l, submission_for(c), "machine_owner", 0);
  l.seal_block(0);
  cast_vote(l, Vote{"validator_a", c.module_id, Verdict::Certify, {}, 1});
  l.seal_block(1);
  CHECK_THROWS_WITH_AS(tally(l, c.module_id, QuorumRule{}, 5, 10), doctest::Contains("VotingOpen"), Error);
  const auto r = tally(l, c.module_id, QuorumRule{}, 10, 10);
  CHECK(r.status == CertificationStatus::Rejected);  // 1 of 3 is no majority
}

TEST_CASE("a later round supersedes an earlier rejection") {
  Ledger l = make_ledger();
  const ModuleConfig c = module_config();
  CHECK(run_round(l, c, {Verdict::Reject, Verdict::Reject, Verdict::Certify}).status == CertificationStatus::Rejected);
  const auto second = run_round(l, c, {Verdict::Certify, Verdict::Certify, Verdict::Reject});
  CHECK(second.round == 2);
  CHECK(second.status == CertificationStatus::Certified);
  CHECK(deployment_gate(l, c.module_id, module_build_digest(c)).allowed);
}

TEST_CASE("deployment gate") {
  const ModuleConfig c = module_config();
  const Digest build = module_build_digest(c);
  {
    Ledger l = make_ledger();
    CHECK(deployment_gate(l, c.module_id, build).reason == DenyReason::NotCertified);
    run_round(l, c, {Verdict::Certify, Verdict::Certify, Verdict::Reject});
    const auto ok = deployment_gate(l, c.module_id, build);
    CHECK(ok.allowed);
    CHECK(ok.reason == DenyReason::None);

    ModuleConfig changed = c;
    changed.behavior = ModuleBehavior::PlantedLeak;
    const auto mismatch = deployment_gate(l, c.module_id, module_build_digest(changed));
    CHECK_FALSE(mismatch.allowed);
    CHECK(mismatch.reason == DenyReason::DigestMismatch);
  }
  {
    Ledger l = make_ledger();
    run_round(l, c, {Verdict::Certify, Verdict::Reject, Verdict::Reject});
    const auto denied = deployment_gate(l, c.module_id, build);
    CHECK_FALSE(denied.allowed);
    CHECK(denied.reason == DenyReason::NotCertified);
  }
}

TEST_CASE("flipping a vote byte breaks the chain") {
  Ledger l = make_ledger();
  run_round(l, module_config(), {Verdict::Certify, Verdict::Certify, Verdict::Certify});
  std::string text = l.to_ndjson();
  const auto pos = text.find("\"verdict\":\"certify\"");
  REQUIRE(pos != std::string::npos);
  text[pos + 11] = 'k';
  CHECK_FALSE(verify_chain_text(text).ok);
}

TEST_CASE("source visibility") {
  ValidationSubmission s = submission_for(module_config());
  CHECK(can_fetch_source(s, Role::Validator, "validator_a", "machine_owner", "machine_manufacturer"));
  CHECK_FALSE(can_fetch_source(s, Role::MachineOwner, "machine_owner", "machine_owner", "machine_manufacturer"));
  CHECK_FALSE(can_fetch_source(s, Role::Auditor, "auditor", "machine_owner", "machine_manufacturer"));
  s.visibility = Visibility::Public;
  CHECK(can_fetch_source(s, Role::MachineManufacturer, "machine_manufacturer", "machine_owner", "machine_manufacturer"));
  CHECK_FALSE(can_fetch_source(s, Role::Auditor, "auditor", "machine_owner", "machine_manufacturer"));
}
