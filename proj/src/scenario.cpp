#include "dcmb/scenario.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dcmb/errors.hpp"

namespace dcmb {

using nlohmann::json;

namespace {

// Shorter patterns collide with random digest bytes far too often to be
// enforced by the ledger scan.
constexpr std::size_t kMinLeakPattern = 4;

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::ConfigInvalid, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorCode::ConfigInvalid, where + ": unknown key '" + key + "'");
  }
}

const HashParams& resolve_params(const std::map<std::string, HashParams>& table, const std::string& name) {
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::ConfigInvalid, "unknown hash params '" + name + "'");
  return it->second;
}

DataSeries parse_data(const json& j, const std::string& where) {
  check_keys(j, {"scripted", "random_walk"}, where);
  DataSeries d;
  if (j.contains("scripted")) {
    for (const auto& period : j.at("scripted")) d.scripted.push_back(period.get<std::vector<double>>());
  }
  if (j.contains("random_walk")) {
    const auto& w = j.at("random_walk");
    check_keys(w, {"start", "max_step", "per_period", "periods"}, where + ".random_walk");
    d.random_walk = RandomWalk{w.value("start", 0.0), w.value("max_step", std::uint64_t{1}),
                               w.value("per_period", std::size_t{1}), w.value("periods", std::size_t{1})};
  }
  if (!d.scripted.empty() && d.random_walk)
    throw Error(ErrorCode::ConfigInvalid, where + ": use either scripted or random_walk");
  return d;
}

CachePolicy parse_policy(const json& j, const CachePolicy& fallback) {
  CachePolicy p = fallback;
  p.capacity = j.value("capacity", p.capacity);
  p.timeout = j.value("timeout", p.timeout);
  return p;
}

std::set<std::pair<ParticipantId, ParticipantId>> implied_channels(const ScenarioConfig& c) {
  std::set<std::pair<ParticipantId, ParticipantId>> out;
  for (const auto& ch : c.channels) out.emplace(ch.from, ch.to);
  for (const auto& m : c.modules) out.emplace(m.config.owner_id, m.config.peer_id);
  for (const auto& [id, role] : c.participants) {
    if (role != Role::Sequencer) continue;
    for (const auto& def : c.contracts)
      for (const auto& cond : def.conditions)
        if (cond.action.kind == ActionKind::Notify) out.emplace(id, cond.action.target_id);
    break;
  }
  return out;
}

std::optional<ParticipantId> first_with_role(const ScenarioConfig& c, Role role) {
  for (const auto& [id, r] : c.participants)
    if (r == role) return id;
  return std::nullopt;
}

/// Records for every period, generated up front so leak patterns are known
/// before the first submission.
std::vector<std::vector<double>> expand_series(const ModuleSpec& spec, std::uint64_t seed) {
  if (!spec.data.random_walk) return spec.data.scripted;
  const RandomWalk& w = *spec.data.random_walk;
  DeterministicRandom rng(seed, "data/" + spec.config.module_id);
  std::vector<std::vector<double>> out(w.periods);
  double value = w.start;
  for (auto& period : out) {
    for (std::size_t i = 0; i < w.per_period; ++i) {
      const auto span = 2 * w.max_step + 1;
      value += static_cast<double>(rng.uniform(span)) - static_cast<double>(w.max_step);
      period.push_back(value);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  try {
    check_keys(j, {"participants", "hash_params", "ledger", "modules", "contracts", "channels", "default_channel",
                   "partitions", "certification", "datasets", "total_ticks", "rng_seed", "paper_faithful"},
               "scenario");
    ScenarioConfig c;
    for (const auto& p : j.value("participants", json::array())) {
      check_keys(p, {"id", "role"}, "participant");
      c.participants.emplace_back(p.at("id").get<std::string>(), role_from_string(p.at("role").get<std::string>()));
    }

    c.hash_params = {{"test", HashParams::test()}, {"production", HashParams::production()}};
    const json hash_params_json = j.value("hash_params", json::object());
    for (const auto& [name, id] : hash_params_json.items())
      c.hash_params[name] = HashParams::parse(id.get<std::string>());

    if (j.contains("ledger")) {
      check_keys(j.at("ledger"), {"block_capacity"}, "ledger");
      c.ledger.block_capacity = j.at("ledger").value("block_capacity", c.ledger.block_capacity);
    }

    for (const auto& def : j.value("contracts", json::array()))
      c.contracts.push_back(parse_contract_definition(def, c.hash_params));

    if (j.contains("default_channel")) {
      check_keys(j.at("default_channel"), {"capacity", "timeout"}, "default_channel");
      c.default_channel_policy = parse_policy(j.at("default_channel"), c.default_channel_policy);
    }

    for (const auto& m : j.value("modules", json::array())) {
      const std::string id = m.at("module_id").get<std::string>();
      const std::string where = "module '" + id + "'";
      check_keys(m,
                 {"module_id", "owner", "peer", "period", "batch_size", "mapping", "contract", "signing_key",
                  "hash_params", "salt_length", "audit_salt", "behavior", "source", "data"},
                 where);
      ModuleSpec spec;
      ModuleConfig& mc = spec.config;
      mc.module_id = id;
      mc.owner_id = m.at("owner").get<std::string>();
      mc.peer_id = m.at("peer").get<std::string>();
      mc.collection_period = m.value("period", mc.collection_period);
      mc.batch_size = m.value("batch_size", mc.batch_size);
      std::vector<IntervalEntry> entries;
      for (const auto& e : m.value("mapping", json::array())) {
        check_keys(e, {"lower", "upper", "label"}, where + " mapping");
        entries.push_back(
            IntervalEntry{e.at("lower").get<double>(), e.at("upper").get<double>(), e.at("label").get<std::string>()});
      }
      mc.mapping = IntervalMapping::create(std::move(entries));
      if (m.contains("contract")) {
        const std::string cid = m.at("contract").get<std::string>();
        const ContractDefinition* def = c.find_contract(cid);
        if (!def) throw Error(ErrorCode::ConfigInvalid, where + " references unknown contract '" + cid + "'");
        mc.contract = ContractBinding{cid, def->provisioning_salt, def->params};
      }
      mc.signing_key = m.value("signing_key", "");
      mc.hash_params = resolve_params(c.hash_params, m.value("hash_params", "test"));
      mc.salt_length = m.value("salt_length", mc.salt_length);
      if (m.contains("audit_salt")) mc.fixed_salt = salt_from_json(m.at("audit_salt"));
      mc.behavior = module_behavior_from_string(m.value("behavior", "compliant"));
      spec.source = m.value("source", "");
      if (m.contains("data")) spec.data = parse_data(m.at("data"), where + " data");
      c.modules.push_back(std::move(spec));
    }

    for (const auto& ch : j.value("channels", json::array())) {
      check_keys(ch, {"from", "to", "capacity", "timeout"}, "channel");
      c.channels.push_back(ChannelSpec{ch.at("from").get<std::string>(), ch.at("to").get<std::string>(),
                                       parse_policy(ch, c.default_channel_policy)});
    }
    for (const auto& p : j.value("partitions", json::array())) {
      check_keys(p, {"from", "to", "from_tick", "to_tick"}, "partition");
      c.partitions.push_back(PartitionWindow{p.at("from").get<std::string>(), p.at("to").get<std::string>(),
                                             p.at("from_tick").get<Tick>(), p.at("to_tick").get<Tick>()});
    }

    if (j.contains("certification")) {
      const auto& cert = j.at("certification");
      check_keys(cert, {"quorum", "voting_window", "rounds"}, "certification");
      c.certification.quorum = QuorumRule::parse(cert.value("quorum", "strict_majority"));
      c.certification.voting_window = cert.value("voting_window", c.certification.voting_window);
      for (const auto& r : cert.value("rounds", json::array())) {
        check_keys(r, {"subject", "dataset", "requirements", "checks", "visibility"}, "certification round");
        c.certification.rounds.push_back(CertificationRound{
            r.at("subject").get<std::string>(), r.value("dataset", ""), r.value("requirements", ""),
            r.value("checks", std::vector<std::string>{}),
            visibility_from_string(r.value("visibility", "validators_only"))});
      }
    }

    const json datasets_json = j.value("datasets", json::object());
    for (const auto& [name, values] : datasets_json.items())
      c.datasets[name] = values.get<std::vector<double>>();

    c.total_ticks = j.value("total_ticks", c.total_ticks);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.paper_faithful = j.value("paper_faithful", false);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("scenario: ") + e.what());
  }
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path + ": " + e.what());
  }
  return from_json(j);
}

const ModuleSpec* ScenarioConfig::find_module(const std::string& module_id) const {
  for (const auto& m : modules)
    if (m.config.module_id == module_id) return &m;
  return nullptr;
}

const ContractDefinition* ScenarioConfig::find_contract(const std::string& contract_id) const {
  for (const auto& c : contracts)
    if (c.contract_id == contract_id) return &c;
  return nullptr;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
  if (total_ticks < 1) fail("total_ticks must be >= 1");
  if (ledger.block_capacity < 1) fail("ledger.block_capacity must be >= 1");
  default_channel_policy.validate();

  std::set<ParticipantId> ids;
  for (const auto& [id, role] : participants) {
    if (id.empty()) fail("participant id is empty");
    if (!ids.insert(id).second) fail("duplicate participant '" + id + "'");
  }
  auto known = [&](const ParticipantId& id) { return ids.contains(id); };

  std::set<std::string> subjects;
  for (const auto& c : contracts) {
    if (!subjects.insert(c.contract_id).second) fail("duplicate id '" + c.contract_id + "'");
    if (!known(c.owner_id)) fail("contract '" + c.contract_id + "' owner '" + c.owner_id + "' is not a participant");
    for (const auto& cond : c.conditions)
      if (!known(cond.action.target_id))
        fail("contract '" + c.contract_id + "' targets unknown participant '" + cond.action.target_id + "'");
  }
  if (!contracts.empty() && !first_with_role(*this, Role::Sequencer)) fail("contracts need a sequencer participant");

  for (const auto& m : modules) {
    m.config.validate();
    const std::string& id = m.config.module_id;
    if (!subjects.insert(id).second) fail("duplicate id '" + id + "'");
    if (!known(m.config.owner_id)) fail("module '" + id + "' owner is not a participant");
    if (!known(m.config.peer_id)) fail("module '" + id + "' peer is not a participant");
    if (m.data.random_walk && (m.data.random_walk->per_period < 1 || m.data.random_walk->periods < 1))
      fail("module '" + id + "' random_walk needs per_period and periods >= 1");
  }

  for (const auto& ch : channels) {
    if (!known(ch.from) || !known(ch.to)) fail("channel " + ch.from + "->" + ch.to + " has an unknown endpoint");
    ch.policy.validate();
  }
  const auto all_channels = implied_channels(*this);
  for (const auto& p : partitions) {
    if (!all_channels.contains({p.from, p.to})) fail("partition names unknown channel " + p.from + "->" + p.to);
    if (p.to_tick <= p.from_tick) fail("partition window must satisfy from_tick < to_tick");
  }

  if (!certification.rounds.empty() && !first_with_role(*this, Role::Validator))
    fail("certification rounds need at least one validator participant");
  for (const auto& r : certification.rounds) {
    if (!subjects.contains(r.subject)) fail("certification round for unknown subject '" + r.subject + "'");
    if (find_module(r.subject) && !datasets.contains(r.dataset))
      fail("certification round for '" + r.subject + "' names unknown dataset '" + r.dataset + "'");
    for (const auto& check : r.checks) check_by_id(check);
  }
}

// ---------------------------------------------------------------------------
// Certification rounds

SigningKey signing_key_for(const std::string& key_name) { return SigningKey::from_seed(sha256("dcmb/signing-key/v1/" + key_name)); }

namespace {

struct RoundOutcome {
  CertificationRecord record;
  ValidationLog log;
  std::vector<std::string> waived;
};

void seal_pending(Ledger& ledger, Tick now, std::vector<json>* events) {
  while (!ledger.pending().empty()) {
    const Block& b = ledger.seal_block(now);
    if (events)
      events->push_back({{"tick", now}, {"type", "BlockSealed"}, {"height", b.height}, {"txs", b.txs.size()}});
  }
}

json contract_source(const ContractDefinition& def) {
  json conditions = json::array();
  for (const auto& c : def.conditions) conditions.push_back({{"label", c.label}, {"action", to_json(c.action)}});
  return json{{"contract_id", def.contract_id},
              {"owner", def.owner_id},
              {"hash_params", def.params.id()},
              {"conditions", std::move(conditions)}};
}

RoundOutcome run_round(Ledger& ledger, const ScenarioConfig& config, const CertificationRound& round, Tick now,
                       std::vector<json>* events) {
  RoundOutcome out;
  std::vector<ValidationCheck> checks;
  for (const auto& id : round.checks) checks.push_back(check_by_id(id));

  ValidationSubmission sub;
  sub.module_id = round.subject;
  sub.dataset_id = round.dataset;
  sub.requirements_id = round.requirements;
  sub.visibility = round.visibility;
  ParticipantId submitter;
  std::function<ValidationResult()> validate;

  if (const ModuleSpec* spec = config.find_module(round.subject)) {
    if (checks.empty()) checks = default_module_checks();
    if (config.paper_faithful) {
      auto it = std::find_if(checks.begin(), checks.end(), [](const auto& c) { return c.check_id == "fresh_salt_usage"; });
      if (it != checks.end()) {
        out.waived.push_back(it->check_id);
        checks.erase(it);
      }
    }
    sub.source_digest = source_digest(spec->source.empty() ? spec->config.to_json().dump() : spec->source);
    sub.build_digest = module_build_digest(spec->config);
    submitter = spec->config.owner_id;
    const std::vector<double>& dataset = config.datasets.at(round.dataset);
    validate = [spec, &dataset, &checks] { return run_validation(spec->config, dataset, checks); };
  } else {
    const ContractDefinition* def = config.find_contract(round.subject);
    if (!def) throw Error(ErrorCode::ConfigInvalid, "unknown certification subject '" + round.subject + "'");
    if (checks.empty()) checks = default_contract_checks();
    sub.source_digest = source_digest(contract_source(*def).dump());
    sub.build_digest = contract_build_digest(build_contract(*def));
    submitter = def->owner_id;
    validate = [def, &checks] { return run_contract_validation(*def, checks); };
  }

  submit_for_certification(ledger, sub, submitter, now);
  seal_pending(ledger, now, events);
  for (const auto& validator : ledger.participants_with_role(Role::Validator)) {
    // Each validator rebuilds and validates on its own.
    ValidationResult result = validate();
    cast_vote(ledger, Vote{validator, round.subject, result.verdict, result.log.digest(), now});
    if (events)
      events->push_back({{"tick", now},
                         {"type", "VoteCast"},
                         {"subject", round.subject},
                         {"validator", validator},
                         {"verdict", to_string(result.verdict)}});
    out.log = std::move(result.log);
  }
  seal_pending(ledger, now, events);
  out.record = tally(ledger, round.subject, config.certification.quorum, now, config.certification.voting_window);
  seal_pending(ledger, now, events);
  if (events) {
    json e = {{"tick", now},
              {"type", "CertificationDecided"},
              {"subject", round.subject},
              {"round", out.record.round},
              {"status", to_string(out.record.status)}};
    if (!out.waived.empty()) e["waived_checks"] = out.waived;
    events->push_back(std::move(e));
  }
  return out;
}

void register_participants(Ledger& ledger, const ScenarioConfig& config) {
  for (const auto& [id, role] : config.participants) ledger.register_participant(id, role);
}

}  // namespace

CertifyOutcome certify_subject(const ScenarioConfig& config, const std::string& subject_id) {
  const CertificationRound* round = nullptr;
  for (const auto& r : config.certification.rounds)
    if (r.subject == subject_id) round = &r;
  if (!round) throw Error(ErrorCode::ConfigInvalid, "no certification round configured for '" + subject_id + "'");
  Ledger ledger(config.ledger);
  register_participants(ledger, config);
  RoundOutcome o = run_round(ledger, config, *round, 0, nullptr);
  return CertifyOutcome{std::move(o.record), std::move(o.log), std::move(ledger)};
}

// ---------------------------------------------------------------------------
// Run

RunResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  RunResult r{RunReport{}, Ledger(config.ledger), Network{}, {}, {}};
  Ledger& ledger = r.ledger;
  Network& net = r.network;
  auto& events = r.events;
  RunReport& report = r.report;
  report.rng_seed = config.rng_seed;
  report.total_ticks = config.total_ticks;
  report.paper_faithful = config.paper_faithful;

  register_participants(ledger, config);

  std::vector<std::vector<std::vector<double>>> series;
  for (const auto& m : config.modules) series.push_back(expand_series(m, config.rng_seed));

  auto add_pattern = [&](const std::string& s) {
    if (s.size() >= kMinLeakPattern) ledger.register_leak_pattern(to_bytes(s));
  };
  for (std::size_t i = 0; i < config.modules.size(); ++i) {
    for (const auto& period : series[i])
      for (double v : period) add_pattern(render_number(v));
    for (const auto& e : config.modules[i].config.mapping.entries()) add_pattern(e.label);
  }
  for (const auto& def : config.contracts)
    for (const auto& cond : def.conditions) add_pattern(cond.label);

  // Certification and deployment gating, all before the first data tick.
  for (const auto& round : config.certification.rounds) {
    RoundOutcome o = run_round(ledger, config, round, 0, &events);
    std::size_t certify = 0;
    for (const auto& v : o.record.votes) certify += v.verdict == Verdict::Certify ? 1 : 0;
    report.certifications.push_back(
        CertificationSummary{round.subject, o.record.round, o.record.status, certify, o.record.votes.size(), o.waived});
  }

  std::vector<DcmbModule> modules;
  for (const auto& spec : config.modules) {
    const Digest build = module_build_digest(spec.config);
    const GateDecision gate = deployment_gate(ledger, spec.config.module_id, build);
    events.push_back({{"tick", 0},
                      {"type", "GateDecision"},
                      {"subject", spec.config.module_id},
                      {"allowed", gate.allowed},
                      {"reason", to_string(gate.reason)}});
    if (!gate.allowed)
      throw Error(ErrorCode::GateDenied,
                  "module '" + spec.config.module_id + "' refused by the deployment gate (" +
                      std::string(to_string(gate.reason)) + ")");
    events.push_back({{"tick", 0},
                      {"type", "Attested"},
                      {"module_id", spec.config.module_id},
                      {"ok", attest_module(ledger, spec.config.module_id, build)}});
    std::optional<SigningKey> key;
    if (!spec.config.signing_key.empty()) key = signing_key_for(spec.config.signing_key);
    modules.emplace_back(spec.config, std::move(key));
  }
  for (const auto& def : config.contracts) {
    const EqualityContract contract = build_contract(def);
    const GateDecision gate = deployment_gate(ledger, def.contract_id, contract_build_digest(contract));
    events.push_back({{"tick", 0},
                      {"type", "GateDecision"},
                      {"subject", def.contract_id},
                      {"allowed", gate.allowed},
                      {"reason", to_string(gate.reason)}});
    if (!gate.allowed)
      throw Error(ErrorCode::GateDenied, "contract '" + def.contract_id + "' refused by the deployment gate (" +
                                             std::string(to_string(gate.reason)) + ")");
    deploy_contract(ledger, contract, CertificationStatus::Certified, 0);
  }
  seal_pending(ledger, 0, &events);

  // Transport.
  for (const auto& ch : config.channels) net.add_channel(ch.from, ch.to, ch.policy);
  for (const auto& [from, to] : implied_channels(config))
    if (!net.has_channel(from, to)) net.add_channel(from, to, config.default_channel_policy);
  const std::optional<ParticipantId> sequencer = first_with_role(config, Role::Sequencer);

  auto log_channel_events = [&](const std::vector<ChannelEvent>& evs, const Channel* only) {
    for (const auto& e : evs) {
      json j = {{"tick", e.tick}, {"type", "P2P"}, {"msg_id", e.msg_id}, {"outcome", to_string(e.kind)}, {"topic", e.topic}};
      if (only) {
        j["from"] = only->from();
        j["to"] = only->to();
      }
      events.push_back(std::move(j));
    }
  };
  auto network_tick = [&](Tick now) {
    for (auto& [key, ch] : net.channels()) log_channel_events(ch.tick(now), &ch);
  };
  auto send = [&](const ParticipantId& from, const ParticipantId& to, Bytes payload, Tick now,
                  const std::string& topic) {
    Channel& ch = net.channel(from, to);
    if (topic == "data") ++report.data_sent;
    const std::size_t before = ch.events().size();
    const SendOutcome outcome = net.send(from, to, std::move(payload), now, topic);
    // Flushed backlog shows up in the channel's own event list.
    std::vector<ChannelEvent> fresh(ch.events().begin() + static_cast<std::ptrdiff_t>(before), ch.events().end());
    log_channel_events(fresh, &ch);
    if (outcome == SendOutcome::Cached)
      events.push_back({{"tick", now},
                        {"type", "P2P"},
                        {"msg_id", ch.next_message_id() - 1},
                        {"outcome", to_string(outcome)},
                        {"topic", topic},
                        {"from", from},
                        {"to", to}});
    return outcome;
  };
  auto handle_firings = [&](Tick now) {
    for (const auto& f : ledger.take_firings()) {
      NotificationRecord n{now, f.contract_id, f.condition_index, f.action, "local"};
      if (f.action.kind == ActionKind::Notify) {
        const json msg = {{"contract_id", f.contract_id},
                          {"importance", to_string(f.action.importance)},
                          {"message", f.action.message},
                          {"trigger_tx", f.trigger_tx}};
        n.outcome = std::string(to_string(send(*sequencer, f.action.target_id, to_bytes(msg.dump()), now, "notification")));
      }
      events.push_back({{"tick", now},
                        {"type", "ContractFired"},
                        {"contract_id", f.contract_id},
                        {"condition", f.condition_index},
                        {"action", to_json(f.action)},
                        {"outcome", n.outcome}});
      report.notifications.push_back(std::move(n));
    }
  };
  auto seal_tick = [&](Tick now) {
    if (ledger.pending().empty()) return;
    const Block& b = ledger.seal_block(now);
    events.push_back({{"tick", now}, {"type", "BlockSealed"}, {"height", b.height}, {"txs", b.txs.size()}});
    handle_firings(now);
  };
  auto log_module_events = [&](const std::vector<ModuleEvent>& evs) {
    for (const auto& e : evs) {
      json j = e.detail;
      j["tick"] = e.tick;
      j["type"] = e.type;
      events.push_back(std::move(j));
    }
  };

  std::vector<DeterministicRandom> salt_rngs;
  for (const auto& m : config.modules) salt_rngs.emplace_back(config.rng_seed, "salts/" + m.config.module_id);

  for (Tick t = 0; t < config.total_ticks; ++t) {
    for (auto& [key, ch] : net.channels()) {
      bool partitioned = false;
      for (const auto& p : config.partitions)
        partitioned = partitioned || (p.from == key.first && p.to == key.second && p.from_tick <= t && t < p.to_tick);
      const ChannelState want = partitioned ? ChannelState::Partitioned : ChannelState::Available;
      if (ch.state() != want) {
        ch.set_availability(want);
        events.push_back({{"tick", t}, {"type", "ChannelState"}, {"from", key.first}, {"to", key.second},
                          {"state", to_string(want)}});
      }
    }
    network_tick(t);

    for (std::size_t i = 0; i < modules.size(); ++i) {
      DcmbModule& module = modules[i];
      const Tick period = module.config().collection_period;
      if (t % period != period - 1) continue;
      const std::size_t k = t / period;
      if (k >= series[i].size()) continue;

      std::vector<DataRecord> records;
      for (double v : series[i][k]) records.push_back(DataRecord{module.config().module_id, v, t});
      if (records.empty()) continue;
      report.records += records.size();

      TickOutput out = module.sender_tick(records, salt_rngs[i], t);
      if (auto tail = module.flush(t, &out.events)) out.evidence_txs.push_back(std::move(*tail));
      for (auto& tx : out.contract_txs) {
        ledger.submit_transaction(std::move(tx));
        ++report.contract_inputs;
      }
      for (auto& tx : out.evidence_txs) {
        ledger.submit_transaction(std::move(tx));
        ++report.evidence_txs;
      }
      for (auto& msg : out.p2p_messages) send(module.config().owner_id, msg.to, std::move(msg.payload), t, "data");
      log_module_events(out.events);
      for (auto& d : out.disclosures) r.disclosures.push_back(std::move(d));
    }
    seal_tick(t);
  }

  // Drain: close every batch, heal every channel, seal until nothing is pending.
  const Tick end = config.total_ticks;
  for (auto& module : modules) {
    std::vector<ModuleEvent> evs;
    if (auto tail = module.flush(end, &evs)) {
      ledger.submit_transaction(std::move(*tail));
      ++report.evidence_txs;
    }
    log_module_events(evs);
  }
  for (auto& [key, ch] : net.channels()) ch.set_availability(ChannelState::Available);
  network_tick(end);
  while (!ledger.pending().empty()) seal_tick(end);

  for (const auto& [key, ch] : net.channels()) {
    const ChannelStats s = ch.stats();
    report.p2p_sent += s.sent;
    report.p2p_delivered += s.delivered;
    report.p2p_dropped_full += s.dropped_full;
    report.p2p_dropped_timeout += s.dropped_timeout;
    for (const auto& m : ch.delivery_log()) report.data_delivered += m.topic == "data" ? 1 : 0;
  }
  for (const auto& b : ledger.blocks())
    for (const auto& tx : b.txs) report.contract_events += tx.kind == TxKind::ContractEvent ? 1 : 0;
  report.blocks = ledger.blocks().size();
  report.chain_ok = ledger.verify_chain().ok;

  const auto audit = verify_audit(ledger.to_ndjson(), r.disclosures);
  report.audit_total = audit.size();
  for (const auto& a : audit) report.audit_verified += a.verified ? 1 : 0;
  report.event_log = "events.ndjson";
  return r;
}

// ---------------------------------------------------------------------------
// Reports and audit

json RunReport::to_json() const {
  json certs = json::array();
  for (const auto& c : certifications) {
    certs.push_back({{"subject", c.subject},
                     {"round", c.round},
                     {"status", to_string(c.status)},
                     {"certify_votes", c.certify_votes},
                     {"votes", c.votes},
                     {"waived_checks", c.waived_checks}});
  }
  json notes = json::array();
  for (const auto& n : notifications) {
    notes.push_back({{"tick", n.tick},
                     {"contract_id", n.contract_id},
                     {"condition", n.condition_index},
                     {"action", to_string(n.action.kind)},
                     {"target", n.action.target_id},
                     {"importance", to_string(n.action.importance)},
                     {"message", n.action.message},
                     {"outcome", n.outcome}});
  }
  return json{{"rng_seed", rng_seed},
              {"total_ticks", total_ticks},
              {"paper_faithful", paper_faithful},
              {"records", records},
              {"p2p",
               {{"sent", p2p_sent},
                {"delivered", p2p_delivered},
                {"dropped_full", p2p_dropped_full},
                {"dropped_timeout", p2p_dropped_timeout},
                {"data_sent", data_sent},
                {"data_delivered", data_delivered}}},
              {"ledger",
               {{"blocks", blocks},
                {"evidence_txs", evidence_txs},
                {"contract_inputs", contract_inputs},
                {"contract_events", contract_events},
                {"chain_ok", chain_ok}}},
              {"certifications", std::move(certs)},
              {"notifications", std::move(notes)},
              {"audit", {{"verified", audit_verified}, {"total", audit_total}}},
              {"event_log", event_log}};
}

std::string RunReport::to_text() const {
  std::ostringstream os;
  os << "run: seed " << rng_seed << ", " << total_ticks << " ticks" << (paper_faithful ? ", paper-faithful" : "")
     << "\n";
  for (const auto& c : certifications) {
    os << "certification " << c.subject << " round " << c.round << ": " << to_string(c.status) << " ("
       << c.certify_votes << "/" << c.votes << " certify)";
    if (!c.waived_checks.empty()) {
      os << ", waived:";
      for (const auto& w : c.waived_checks) os << " " << w;
    }
    os << "\n";
  }
  os << "records: " << records << "\n";
  os << "p2p: " << p2p_sent << " sent, " << p2p_delivered << " delivered, " << p2p_dropped_full << " dropped (full), "
     << p2p_dropped_timeout << " dropped (timeout)\n";
  os << "ledger: " << blocks << " blocks, " << evidence_txs << " evidence, " << contract_inputs << " contract inputs, "
     << contract_events << " contract events, chain " << (chain_ok ? "valid" : "INVALID") << "\n";
  for (const auto& n : notifications) {
    os << "tick " << n.tick << ": " << n.contract_id << " -> " << to_string(n.action.kind) << " " << n.action.target_id
       << " [" << to_string(n.action.importance) << "] \"" << n.action.message << "\" (" << n.outcome << ")\n";
  }
  os << "audit: " << audit_verified << "/" << audit_total << " disclosures verified\n";
  return os.str();
}

json disclosures_to_json(std::span<const Disclosure> disclosures) {
  json arr = json::array();
  for (const auto& d : disclosures) arr.push_back({{"payload", to_string(d.payload)}, {"salt_hex", to_hex(d.salt.bytes)}});
  return json{{"disclosures", std::move(arr)}};
}

std::vector<Disclosure> disclosures_from_json(const json& j) {
  try {
    const json& arr = j.is_object() ? j.at("disclosures") : j;
    std::vector<Disclosure> out;
    for (const auto& e : arr) {
      check_keys(e, {"payload", "payload_hex", "salt", "salt_hex"}, "disclosure");
      Disclosure d;
      if (e.contains("payload_hex")) {
        d.payload = from_hex(e.at("payload_hex").get<std::string>());
      } else {
        d.payload = to_bytes(e.at("payload").get<std::string>());
      }
      if (e.contains("salt_hex")) {
        d.salt = Salt{from_hex(e.at("salt_hex").get<std::string>())};
      } else {
        d.salt = Salt::from_text(e.at("salt").get<std::string>());
      }
      out.push_back(std::move(d));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("disclosures: ") + e.what());
  }
}

std::vector<AuditResult> verify_audit(std::string_view ledger_ndjson, std::span<const Disclosure> disclosures) {
  const ChainCheck check = verify_chain_text(ledger_ndjson);
  if (!check.ok) {
    std::string where = check.first_bad_height ? " at height " + std::to_string(*check.first_bad_height) : "";
    throw Error(ErrorCode::ChainInvalid, check.reason + where);
  }
  const std::vector<Block> blocks = parse_ledger(ledger_ndjson);

  std::multimap<Bytes, std::pair<Commitment, std::uint64_t>> by_salt;
  for (const auto& b : blocks)
    for (const auto& tx : b.txs) {
      if (tx.kind != TxKind::Evidence) continue;
      for (auto& c : blob_from_evidence_body(tx.body).message_commitments) {
        Bytes salt = c.salt.bytes;
        by_salt.emplace(std::move(salt), std::make_pair(std::move(c), b.height));
      }
    }

  std::vector<AuditResult> out;
  for (const auto& d : disclosures) {
    AuditResult a{d, false, std::nullopt};
    auto [lo, hi] = by_salt.equal_range(d.salt.bytes);
    for (auto it = lo; it != hi && !a.verified; ++it) {
      try {
        if (verify(it->second.first, d.payload)) {
          a.verified = true;
          a.block_height = it->second.second;
        }
      } catch (const Error&) {
        // unparseable params_id or empty payload cannot verify
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

void write_run_outputs(const RunResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  write_text_file((out_dir / "ledger.ndjson").string(), result.ledger.to_ndjson());
  write_text_file((out_dir / "report.json").string(), result.report.to_json().dump(2) + "\n");
  write_text_file((out_dir / "report.txt").string(), result.report.to_text());
  std::string ev;
  for (const auto& e : result.events) ev += e.dump() + "\n";
  write_text_file((out_dir / "events.ndjson").string(), ev);
  write_text_file((out_dir / "disclosures.json").string(), disclosures_to_json(result.disclosures).dump(2) + "\n");
}

}  // namespace dcmb
