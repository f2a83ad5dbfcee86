#include "doctest.h"

#include <cmath>

#include "dcmb/certification.hpp"
#include "dcmb/dcmb_module.hpp"
#include "dcmb/errors.hpp"
#include "dcmb/leak_scan.hpp"

using namespace dcmb;
using nlohmann::json;

namespace {

SigningKey test_key(const std::string& name = "module-key") { return SigningKey::from_seed(sha256(name)); }

ModuleConfig maintenance_module(std::size_t batch = 1) {
  ModuleConfig c;
  c.module_id = "dcmb-owner";
  c.owner_id = "machine_owner";
  c.peer_id = "machine_manufacturer";
  c.batch_size = batch;
  c.mapping = IntervalMapping::create({{5300, 5400, "Maintenance imminent"}});
  c.contract = ContractBinding{"maintenance", Salt::from_text("fjpd7"), HashParams::test()};
  c.signing_key = "module-key";
  return c;
}

std::vector<DataRecord> records_of(std::initializer_list<double> values) {
  std::vector<DataRecord> out;
  for (double v : values) out.push_back(DataRecord{"sensor", v, 0});
  return out;
}

}  // namespace

TEST_CASE("map_to_interval uses strict bounds") {
  const auto m = IntervalMapping::create({{5300, 5400, "Maintenance imminent"}});
  CHECK(map_to_interval(5367, m) == "Maintenance imminent");
  CHECK_FALSE(map_to_interval(5300, m));
  CHECK_FALSE(map_to_interval(5400, m));
  CHECK(map_to_interval(5300.5, m) == "Maintenance imminent");
  CHECK_FALSE(map_to_interval(5299, m));
  CHECK_FALSE(map_to_interval(5367, IntervalMapping{}));
}

TEST_CASE("map_to_interval agrees with brute-force containment over a dense grid") {
  const std::vector<IntervalEntry> entries{
      {5200, 5300, "normal"}, {5300, 5400, "Maintenance imminent"}, {5420, 5480, "critical"}};
  const auto m = IntervalMapping::create(entries);
  for (int v = 5200; v <= 5500; ++v) {
    std::optional<std::string> expected;
    for (const auto& e : entries)
      if (e.lower < v && v < e.upper) expected = e.label;
    CHECK(map_to_interval(v, m) == expected);
  }
  for (double v = 5190; v <= 5510; v += 0.25) {
    if (auto label = map_to_interval(v, m)) {
      const auto& e = *std::find_if(entries.begin(), entries.end(), [&](const auto& x) { return x.label == *label; });
      CHECK(e.lower < v);
      CHECK(v < e.upper);
    } else {
      for (const auto& e : entries) CHECK_FALSE((e.lower < v && v < e.upper));
    }
  }
}

TEST_CASE("interval mapping validation") {
  CHECK_THROWS_WITH_AS(IntervalMapping::create({{1, 1, "x"}}), doctest::Contains("ConfigInvalid"), Error);
  CHECK_THROWS_AS(IntervalMapping::create({{2, 1, "x"}}), Error);
  CHECK_THROWS_AS(IntervalMapping::create({{0, 10, "a"}, {5, 15, "b"}}), Error);
  CHECK_THROWS_AS(IntervalMapping::create({{0, NAN, "a"}}), Error);
  CHECK_THROWS_AS(IntervalMapping::create({{0, 1, ""}}), Error);
  CHECK_NOTHROW(IntervalMapping::create({{0, 10, "a"}, {10, 20, "b"}}));
}

TEST_CASE("sender_tick on the maintenance value emits all three outputs") {
  DcmbModule module(maintenance_module(), test_key());
  DeterministicRandom rng(1);
  const auto records = records_of({5367});
  const TickOutput out = module.sender_tick(records, rng, 11);

  REQUIRE(out.p2p_messages.size() == 1);
  CHECK(out.p2p_messages[0].to == "machine_manufacturer");
  CHECK(to_string(out.p2p_messages[0].payload) == "5367");

  REQUIRE(out.evidence_txs.size() == 1);
  const EvidenceBlob blob = blob_from_evidence_body(out.evidence_txs[0].body);
  REQUIRE(blob.message_commitments.size() == 1);
  REQUIRE(out.disclosures.size() == 1);
  CHECK(verify(blob.message_commitments[0], to_bytes("5367")));
  CHECK(blob.message_commitments[0].salt == out.disclosures[0].salt);
  CHECK(verify_blob(blob, *module.public_key()));

  REQUIRE(out.contract_txs.size() == 1);
  const Commitment label = commit("Maintenance imminent", Salt::from_text("fjpd7"), HashParams::test());
  CHECK(out.contract_txs[0].kind == TxKind::ContractInput);
  CHECK(out.contract_txs[0].body.at("value") == to_hex(label.hash));
  CHECK(out.contract_txs[0].body.at("contract_id") == "maintenance");

  const std::vector<Bytes> patterns{to_bytes("5367"), to_bytes("Maintenance imminent")};
  for (const auto* txs : {&out.evidence_txs, &out.contract_txs})
    for (const auto& tx : *txs) {
      CHECK_FALSE(find_leak(tx.body, patterns));
      CHECK(tx.body.dump().find("Maintenance imminent") == std::string::npos);
    }
  CHECK(module.pending().empty());
}

TEST_CASE("sender_tick with no records is empty") {
  DcmbModule module(maintenance_module(), test_key());
  DeterministicRandom rng(1);
  CHECK(module.sender_tick({}, rng, 0).empty());
  CHECK_FALSE(module.flush(0));
}

TEST_CASE("unmapped values raise an event and still produce evidence") {
  DcmbModule module(maintenance_module(), test_key());
  DeterministicRandom rng(1);
  const auto records = records_of({5300});
  const TickOutput out = module.sender_tick(records, rng, 0);
  CHECK(out.contract_txs.empty());
  CHECK(out.evidence_txs.size() == 1);
  REQUIRE(out.events.size() == 2);
  CHECK(out.events[0].type == "UnmappedValue");
  CHECK(out.events[1].type == "BlobSealed");
}

TEST_CASE("batching: 10 records with batch 4 seal two blobs and keep two pending") {
  DcmbModule module(maintenance_module(4), test_key());
  DeterministicRandom rng(3);
  std::vector<DataRecord> records;
  for (int i = 0; i < 10; ++i) records.push_back(DataRecord{"s", 1000.0 + i, 0});
  const TickOutput out = module.sender_tick(records, rng, 0);
  CHECK(out.evidence_txs.size() == 2);
  for (const auto& tx : out.evidence_txs) CHECK(blob_from_evidence_body(tx.body).message_commitments.size() == 4);
  CHECK(module.pending().size() == 2);
  CHECK(out.p2p_messages.size() == 10);

  const auto tail = module.flush(1);
  REQUIRE(tail);
  CHECK(blob_from_evidence_body(tail->body).message_commitments.size() == 2);
  CHECK(module.pending().empty());
}

TEST_CASE("evidence count is ceil(n / b)") {
  for (std::size_t b : {1u, 3u, 7u, 50u}) {
    for (std::size_t n : {1u, 5u, 21u, 60u}) {
      ModuleConfig c = maintenance_module(b);
      c.mapping = {};
      c.contract.reset();
      c.hash_params = HashParams{Argon2Variant::id, 8, 1, 1, 32};
      DcmbModule module(c, test_key());
      DeterministicRandom rng(n * 100 + b);
      std::vector<DataRecord> records(n, DataRecord{"s", 1, 0});
      TickOutput out = module.sender_tick(records, rng, 0);
      if (auto tail = module.flush(0)) out.evidence_txs.push_back(*tail);
      CHECK(out.evidence_txs.size() == (n + b - 1) / b);
    }
  }
}

TEST_CASE("every emitted payload is covered by exactly one sealed commitment") {
  ModuleConfig c = maintenance_module(4);
  DcmbModule module(c, test_key());
  DeterministicRandom rng(9);
  const auto records = records_of({5367, 5301, 12, 0.5, -3, 5399.75, 8});
  TickOutput out = module.sender_tick(records, rng, 0);
  if (auto tail = module.flush(0)) out.evidence_txs.push_back(*tail);

  std::vector<Commitment> all;
  for (const auto& tx : out.evidence_txs)
    for (const auto& cm : blob_from_evidence_body(tx.body).message_commitments) all.push_back(cm);
  REQUIRE(all.size() == out.disclosures.size());
  for (std::size_t i = 0; i < out.disclosures.size(); ++i) {
    const auto& d = out.disclosures[i];
    CHECK(d.payload == out.p2p_messages[i].payload);
    int hits = 0;
    for (const auto& cm : all) hits += (cm.salt == d.salt && verify(cm, d.payload)) ? 1 : 0;
    CHECK(hits == 1);
  }
}

TEST_CASE("missing signing key") {
  DcmbModule module(maintenance_module(), std::nullopt);
  DeterministicRandom rng(1);
  const auto records = records_of({5367});
  CHECK_THROWS_WITH_AS(module.sender_tick(records, rng, 0), doctest::Contains("SigningKeyUnavailable"), Error);
  std::vector<Commitment> pending{commit("x", Salt::from_text("salt"), HashParams::test())};
  CHECK_THROWS_WITH_AS(seal_blob(pending, nullptr), doctest::Contains("SigningKeyUnavailable"), Error);
  std::vector<Commitment> empty;
  const SigningKey key = test_key();
  CHECK_THROWS_AS(seal_blob(empty, &key), Error);
}

TEST_CASE("blob mutations break verification") {
  const SigningKey key = test_key();
  DeterministicRandom rng(4);
  std::vector<Commitment> pending;
  for (int i = 0; i < 4; ++i) pending.push_back(commit(std::to_string(i), generate_salt(rng), HashParams::test()));
  const std::vector<Commitment> original = pending;
  const EvidenceBlob blob = seal_blob(pending, &key);
  CHECK(pending.empty());
  CHECK(verify_blob(blob, key.public_key()));

  for (std::size_t drop = 0; drop < 4; ++drop) {
    std::vector<Commitment> fewer = original;
    fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(drop));
    CHECK(compute_blob_digest(fewer) != blob.blob_digest);
  }

  EvidenceBlob swapped = blob;
  std::swap(swapped.message_commitments[0], swapped.message_commitments[1]);
  CHECK_FALSE(verify_blob(swapped, key.public_key()));

  EvidenceBlob substituted = blob;
  substituted.message_commitments[2] = commit("other", generate_salt(rng), HashParams::test());
  CHECK_FALSE(verify_blob(substituted, key.public_key()));

  EvidenceBlob resigned = substituted;
  resigned.blob_digest = compute_blob_digest(resigned.message_commitments);
  CHECK_FALSE(verify_blob(resigned, key.public_key()));

  CHECK_FALSE(verify_blob(blob, test_key("someone-else").public_key()));

  std::vector<Commitment> one{original[0]};
  CHECK(verify_blob(seal_blob(one, &key), key.public_key()));
}

TEST_CASE("blob survives a ledger round trip") {
  Ledger ledger;
  ledger.register_participant("machine_owner", Role::MachineOwner);
  DcmbModule module(maintenance_module(3), test_key());
  DeterministicRandom rng(8);
  const auto records = records_of({1, 2, 3, 4, 5, 6});
  const TickOutput out = module.sender_tick(records, rng, 0);
  for (const auto& tx : out.evidence_txs) ledger.submit_transaction(tx);
  ledger.seal_block(1);

  const std::vector<Block> parsed = parse_ledger(ledger.to_ndjson());
  int blobs = 0;
  for (const auto& b : parsed)
    for (const auto& tx : b.txs) {
      CHECK(verify_blob(blob_from_evidence_body(tx.body), *module.public_key()));
      ++blobs;
    }
  CHECK(blobs == 2);
}

TEST_CASE("fixed salt replays the single-salt example") {
  ModuleConfig c = maintenance_module();
  c.fixed_salt = Salt::from_text("fjpd7");
  DcmbModule module(c, test_key());
  DeterministicRandom rng(1);
  const auto records = records_of({5367});
  const TickOutput out = module.sender_tick(records, rng, 0);
  const EvidenceBlob blob = blob_from_evidence_body(out.evidence_txs.at(0).body);
  CHECK(to_hex(blob.message_commitments.at(0).hash) ==
        "a079fdef7e67c97ec825611e91f34dd89bec4c18e7685be76ecb78c70362c200");
}

TEST_CASE("planted leak copies the raw value into evidence") {
  ModuleConfig c = maintenance_module();
  c.behavior = ModuleBehavior::PlantedLeak;
  DcmbModule module(c, test_key());
  DeterministicRandom rng(1);
  const auto records = records_of({5367});
  const TickOutput out = module.sender_tick(records, rng, 0);
  const std::vector<Bytes> patterns{to_bytes("5367")};
  CHECK(find_leak(out.evidence_txs.at(0).body, patterns));

  Ledger ledger;
  ledger.register_participant("machine_owner", Role::MachineOwner);
  ledger.register_leak_pattern(to_bytes("5367"));
  CHECK_THROWS_WITH_AS(ledger.submit_transaction(out.evidence_txs[0]), doctest::Contains("LeakRejected"), Error);
}

TEST_CASE("attest_module binds the running digest to the certified record") {
  Ledger ledger;
  ledger.register_participant("machine_owner", Role::MachineOwner);
  ledger.register_participant("sequencer", Role::Sequencer);
  for (const char* v : {"v1", "v2", "v3"}) ledger.register_participant(v, Role::Validator);

  const ModuleConfig config = maintenance_module();
  const Digest build = module_build_digest(config);
  CHECK_THROWS_WITH_AS(attest_module(ledger, config.module_id, build), doctest::Contains("NotCertified"), Error);

  submit_for_certification(
      ledger, ValidationSubmission{config.module_id, source_digest("src"), build, "ds", "req", Visibility::Public},
      "machine_owner", 0);
  ledger.seal_block(0);
  const auto result = run_validation(config, std::vector<double>{5367, 10}, default_module_checks());
  for (const char* v : {"v1", "v2", "v3"})
    cast_vote(ledger, Vote{v, config.module_id, result.verdict, result.log.digest(), 1});
  ledger.seal_block(1);
  const auto record = tally(ledger, config.module_id, QuorumRule{}, 2);
  ledger.seal_block(2);

  CHECK(record.status == CertificationStatus::Certified);
  CHECK(attest_module(ledger, config.module_id, build));
  CHECK(attest_module(ledger, config.module_id, record.build_digest));
  Digest off = build;
  off[31] ^= 0x01;
  CHECK_FALSE(attest_module(ledger, config.module_id, off));
}
