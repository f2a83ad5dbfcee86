// dcmb: run scenarios and inspect or audit the resulting ledgers.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "dcmb/errors.hpp"
#include "dcmb/scenario.hpp"

using namespace dcmb;
using nlohmann::json;

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, bool paper_faithful,
            const std::string& out_dir) {
  ScenarioConfig config = ScenarioConfig::load(config_path);
  if (seed) config.rng_seed = *seed;
  if (paper_faithful) config.paper_faithful = true;
  const RunResult result = run_scenario(config);
  write_run_outputs(result, out_dir);
  std::cout << result.report.to_text() << "outputs written to " << out_dir << "\n";
  return result.report.chain_ok ? 0 : static_cast<int>(ErrorCategory::Verification);
}

int cmd_verify_chain(const std::string& ledger_path) {
  const ChainCheck check = verify_chain_text(read_text_file(ledger_path));
  if (check.ok) {
    std::cout << "chain valid\n";
    return 0;
  }
  std::cout << "chain INVALID";
  if (check.first_bad_height) std::cout << " at height " << *check.first_bad_height;
  std::cout << ": " << check.reason << "\n";
  return static_cast<int>(ErrorCategory::Verification);
}

int cmd_verify_audit(const std::string& ledger_path, const std::string& disclosures_path) {
  json j;
  try {
    j = json::parse(read_text_file(disclosures_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, disclosures_path + ": " + e.what());
  }
  const auto disclosures = disclosures_from_json(j);
  const auto results = verify_audit(read_text_file(ledger_path), disclosures);
  std::size_t ok = 0;
  for (const auto& r : results) {
    std::cout << (r.verified ? "verified  " : "unverified") << "  salt " << to_hex(r.disclosure.salt.bytes);
    if (r.block_height) std::cout << "  block " << *r.block_height;
    std::cout << "\n";
    ok += r.verified ? 1 : 0;
  }
  std::cout << ok << "/" << results.size() << " verified\n";
  return ok == results.size() ? 0 : static_cast<int>(ErrorCategory::Verification);
}

int cmd_certify(const std::string& config_path, const std::string& subject) {
  const ScenarioConfig config = ScenarioConfig::load(config_path);
  const CertifyOutcome outcome = certify_subject(config, subject);
  const auto record = latest_certification_record(outcome.ledger.blocks(), subject);
  for (const auto& b : outcome.ledger.blocks())
    for (const auto& tx : b.txs)
      if (tx.body.value("type", "") == "record") std::cout << tx.body.dump(2) << "\n";
  std::cout << "validation log: " << outcome.log.to_json().dump() << "\n";
  return record && record->status == CertificationStatus::Certified ? 0
                                                                     : static_cast<int>(ErrorCategory::Verification);
}

int cmd_inspect(const std::string& ledger_path) {
  const std::string text = read_text_file(ledger_path);
  const ChainCheck check = verify_chain_text(text);
  const auto blocks = parse_ledger(text);
  std::map<std::string, std::size_t> kinds;
  std::size_t txs = 0;
  for (const auto& b : blocks) {
    std::cout << "block " << b.height << "  " << to_hex(b.block_hash).substr(0, 16) << "  " << b.txs.size()
              << " txs\n";
    for (const auto& tx : b.txs) {
      ++kinds[std::string(to_string(tx.kind))];
      ++txs;
      std::cout << "  " << to_hex(tx.tx_id).substr(0, 16) << "  " << to_string(tx.kind) << "  from " << tx.sender_id << "  t="
                << tx.timestamp;
      if (tx.body.contains("type")) std::cout << "  " << tx.body.at("type").get<std::string>();
      std::cout << "\n";
    }
  }
  std::cout << blocks.size() << " blocks, " << txs << " transactions";
  for (const auto& [k, n] : kinds) std::cout << ", " << n << " " << k;
  std::cout << "\nchain " << (check.ok ? "valid" : "INVALID: " + check.reason) << "\n";
  return check.ok ? 0 : static_cast<int>(ErrorCategory::Verification);
}

int cmd_audit_lookup(const std::string& ledger_path, const std::string& hash_hex) {
  const auto blocks = parse_ledger(read_text_file(ledger_path));
  const auto hits = audit_lookup(blocks, from_hex(hash_hex));
  for (const auto& h : hits)
    std::cout << "block " << h.block_height << "  tx " << to_hex(h.tx_id) << "  salt " << to_hex(h.salt) << "  "
              << h.params_id << "\n";
  if (hits.empty()) std::cout << "not found\n";
  return hits.empty() ? static_cast<int>(ErrorCategory::Verification) : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data confidentiality module simulator"};
  app.require_subcommand(1);

  std::string config_path, ledger_path, disclosures_path, subject, hash_hex, out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool paper_faithful = false;

  auto* run = app.add_subcommand("run", "run a scenario and write ledger, report and event log");
  run->add_option("config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override rng_seed");
  run->add_flag("--paper-faithful", paper_faithful, "reuse the configured audit salt literally");
  run->add_option("--out", out_dir, "output directory");

  auto* verify_audit_cmd = app.add_subcommand("verify-audit", "check disclosed (payload, salt) pairs against a ledger");
  verify_audit_cmd->add_option("ledger", ledger_path)->required()->check(CLI::ExistingFile);
  verify_audit_cmd->add_option("disclosures", disclosures_path)->required()->check(CLI::ExistingFile);

  auto* verify_chain_cmd = app.add_subcommand("verify-chain", "check hash links of a ledger file");
  verify_chain_cmd->add_option("ledger", ledger_path)->required()->check(CLI::ExistingFile);

  auto* certify = app.add_subcommand("certify", "run one certification round and print the on-chain record");
  certify->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  certify->add_option("subject", subject, "module or contract id")->required();

  auto* inspect = app.add_subcommand("inspect-ledger", "list blocks and transactions");
  inspect->add_option("ledger", ledger_path)->required()->check(CLI::ExistingFile);

  auto* lookup = app.add_subcommand("audit-lookup", "find a commitment hash in a ledger");
  lookup->add_option("ledger", ledger_path)->required()->check(CLI::ExistingFile);
  lookup->add_option("hash", hash_hex, "hex commitment hash")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorCategory::Usage);
  }

  try {
    if (*run) return cmd_run(config_path, seed, paper_faithful, out_dir);
    if (*verify_audit_cmd) return cmd_verify_audit(ledger_path, disclosures_path);
    if (*verify_chain_cmd) return cmd_verify_chain(ledger_path);
    if (*certify) return cmd_certify(config_path, subject);
    if (*inspect) return cmd_inspect(ledger_path);
    if (*lookup) return cmd_audit_lookup(ledger_path, hash_hex);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(category_of(e.code()));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
