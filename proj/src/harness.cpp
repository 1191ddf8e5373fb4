#include "dnsaml/harness.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace dnsaml::harness
{

using adversary::Adversary;
using adversary::Archetype;
using adversary::CaptureEntry;
using adversary::Direction;
using adversary::RuleMatch;
using adversary::SpoofRule;
using adversary::UnitKind;
using agent::AgentAction;
using dialect::Kind;
using Mode = countermeasures::CountermeasureMode;

const char *to_string(Scope s) { return s == Scope::Specific ? "SP" : "LS"; }

const char *to_string(Attack a)
{
  switch (a)
  {
  case Attack::InformationDisclosure: return "att-id";
  case Attack::FalseAlert: return "att-fa";
  case Attack::Silencing: return "att-s";
  }
  return "?";
}

Attack parse_attack(std::string_view text)
{
  if (text == "att-id") return Attack::InformationDisclosure;
  if (text == "att-fa") return Attack::FalseAlert;
  if (text == "att-s") return Attack::Silencing;
  throw std::invalid_argument("unknown attack '" + std::string(text) + "'");
}

void ValidationSetup::validate() const
{
  std::set<std::string> benign_sigs;
  for (const auto &f : benign)
    benign_sigs.insert(dialect::signature_for(dialect, f.content).hex());
  for (const auto &f : malicious)
    if (benign_sigs.count(dialect::signature_for(dialect, f.content).hex()))
      throw SetupError("file " + f.id + " is in both F_B and F_M");
  if (candidate_responses.empty())
    throw SetupError("R_O is empty");
}

std::string ValidationTrace::to_jsonl() const
{
  std::ostringstream out;
  for (const auto &f : files)
  {
    nlohmann::ordered_json j;
    j["attack"] = attack;
    j["file"] = f.file_id;
    if (attack == "att-id")
    {
      j["q_e1"] = f.observed_e1 ? nlohmann::json(*f.observed_e1) : nlohmann::json(nullptr);
      j["q_e2"] = f.observed_e2 ? nlohmann::json(*f.observed_e2) : nlohmann::json(nullptr);
    }
    else
    {
      j["r"] = f.service_response;
      j["a"] = f.action;
      auto spoofs = nlohmann::json::array();
      for (const auto &s : f.spoofed)
        spoofs.push_back({{"r_j", s.response}, {"a", s.action}, {"notes", s.notes}});
      j["spoofed"] = spoofs;
      j["in_V"] = f.in_v;
    }
    out << j.dump() << "\n";
  }
  nlohmann::ordered_json tail;
  tail["attack"] = attack;
  tail["V"] = v;
  tail["warnings"] = warnings;
  if (!failure.empty())
    tail["failure"] = failure;
  out << tail.dump() << "\n";
  return out.str();
}

namespace
{

std::string describe_response(const std::optional<wire::DnsMessage> &resp)
{
  if (!resp)
    return "none";
  if (resp->rcode != wire::RCode::NoError)
    return wire::to_string(resp->rcode);
  std::string out;
  for (const auto &rr : resp->answers)
  {
    if (!out.empty())
      out += ", ";
    if (const auto *a = rr.ipv4())
      out += "A " + wire::ipv4_to_string(*a);
    else
      out += "TXT";
  }
  return out.empty() ? "NOERROR (empty)" : out;
}

std::string describe_action(const agent::ScanOutcome &o)
{
  return o.action ? agent::to_string(*o.action) : std::string("none:") + agent::to_string(o.status);
}

struct Deployment
{
  agent::ScanOutcome outcome;
  std::vector<CaptureEntry> units;
};

/// Shared state of one validation run: a service, an on-path adversary and
/// a pristine sandbox per deployment.
class Bench
{
public:
  explicit Bench(const ValidationSetup &setup)
      : setup_(setup), keys_(countermeasures::KeyMaterial::derive(setup.seed)),
        service_(setup.registry, countermeasures::service_config_for(setup.countermeasure, keys_)),
        adversary_(adversary_config(setup)), flows_(setup.seed ^ 0x9e3779b97f4a7c15ULL)
  {
  }

  Adversary &adversary() { return adversary_; }

  Deployment deploy(const FileSpec &file, std::string_view endpoint, std::vector<SpoofRule> rules)
  {
    const fs::path sandbox = setup_.work_dir / ("deploy-" + std::to_string(counter_++));
    fs::remove_all(sandbox);
    adversary_.set_rules(std::move(rules));
    const std::size_t mark = adversary_.log().size();

    auto transport = countermeasures::make_transport(setup_.countermeasure, service_, &adversary_,
                                                     keys_, flows_.next());
    agent::AgentPolicy policy = setup_.policy;
    countermeasures::configure_policy(policy, setup_.countermeasure, keys_);
    if (setup_.salt_per_endpoint)
      policy.endpoint_salt = std::string(endpoint);

    sim::SimClock clock;
    Deployment d;
    {
      agent::Agent agent(policy, sandbox, *transport, clock);
      auto path = agent.files_dir() / file.id;
      {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char *>(file.content.data()),
                  static_cast<std::streamsize>(file.content.size()));
      }
      if (setup_.dialect.kind == Kind::MalwareDB)
      {
        auto report = agent.scan_sandbox();
        if (report.outcomes.empty())
          throw SetupError("scan of " + file.id + " aborted: " + report.summary.abort_reason);
        d.outcome = std::move(report.outcomes.front());
      }
      else
      {
        d.outcome = agent.scan_file(path);
      }
    }
    const auto &entries = adversary_.log().entries();
    d.units.assign(entries.begin() + static_cast<std::ptrdiff_t>(mark), entries.end());
    fs::remove_all(sandbox);
    if (!d.outcome.query)
      throw SetupError("scan of " + file.id + " produced no query");
    return d;
  }

  /// Rule forging r_j for this file, at the configured scope.
  SpoofRule rule_for(const FileSpec &file, const Forgery &forged) const
  {
    SpoofRule rule;
    rule.forged = forged;
    rule.match.qtype = wire::RType::A;
    if (setup_.scope == Scope::Specific)
    {
      auto sig = dialect::signature_for(setup_.dialect, file.content);
      rule.match.kind = RuleMatch::Kind::Exact;
      rule.match.name = setup_.dialect.zone.prepend(sig.hex());
    }
    else
    {
      rule.match.kind = RuleMatch::Kind::Suffix;
      rule.match.name = setup_.dialect.zone;
    }
    return rule;
  }

  /// First lookup unit the eavesdropper saw leaving the endpoint: the
  /// signature label for plaintext DNS, the raw frame otherwise.
  std::optional<std::string> observed_lookup(const Deployment &d) const
  {
    for (const auto &u : d.units)
    {
      if (u.direction != Direction::ToService || u.kind == UnitKind::Handshake)
        continue;
      if (u.message)
      {
        const auto &labels = u.message->question.name.labels();
        if (labels.empty())
          continue;
        if (setup_.dialect.kind == Kind::MalwareDB && labels.front() == dialect::kNessusCheckLabel)
          continue;
        return labels.front();
      }
      return wire::to_hex(u.bytes);
    }
    return std::nullopt;
  }

private:
  static adversary::AdversaryConfig adversary_config(const ValidationSetup &setup)
  {
    auto cfg = setup.adversary;
    cfg.rules.clear();
    if (setup.countermeasure.downgrade)
      cfg.block_handshakes = true;
    return cfg;
  }

  const ValidationSetup &setup_;
  countermeasures::KeyMaterial keys_;
  service::LookupService service_;
  Adversary adversary_;
  sim::Rng flows_;
  std::size_t counter_{0};
};

// Shared body of the false-alert and silencing procedures; they differ only
// in which file set is deployed and which action set counts as flipped.
ValidationResult validate_flip(const ValidationSetup &setup, const std::vector<FileSpec> &files,
                               bool files_are_benign, const char *name)
{
  setup.validate();
  fs::create_directories(setup.work_dir);
  Bench bench(setup);
  ValidationResult result;
  result.trace.attack = name;

  auto expected_unspoofed = [&](const agent::ScanOutcome &o) {
    if (!o.action)
      return false;
    return files_are_benign ? agent::is_benign_action(*o.action) : agent::is_malicious_action(*o.action);
  };
  auto flipped = [&](const agent::ScanOutcome &o) {
    if (!o.action)
      return false;
    return files_are_benign ? agent::is_malicious_action(*o.action) : agent::is_benign_action(*o.action);
  };

  std::set<std::string> v;
  for (const auto &f : files)
  {
    FileTrace ft;
    ft.file_id = f.id;
    auto base = bench.deploy(f, "e1", {});
    ft.service_response = describe_response(base.outcome.response);
    ft.action = describe_action(base.outcome);
    if (!expected_unspoofed(base.outcome))
    {
      result.trace.failure = "sanity check failed for " + f.id + ": action " + ft.action;
      result.trace.files.push_back(std::move(ft));
      result.feasible = false;
      return result;
    }
    for (const auto &r : setup.candidate_responses)
    {
      auto spoofed = bench.deploy(f, "e1", {bench.rule_for(f, r)});
      ft.spoofed.push_back(SpoofAttempt{r.describe(), describe_action(spoofed.outcome), spoofed.outcome.notes});
      if (flipped(spoofed.outcome))
      {
        v.insert(f.id);
        ft.in_v = true;
      }
    }
    result.trace.files.push_back(std::move(ft));
  }

  result.trace.v.assign(v.begin(), v.end());
  std::set<std::string> all;
  for (const auto &f : files)
    all.insert(f.id);
  result.feasible = v == all;
  return result;
}

} // namespace

ValidationResult validate_att_id(const ValidationSetup &setup)
{
  setup.validate();
  fs::create_directories(setup.work_dir);
  Bench bench(setup);
  ValidationResult result;
  result.trace.attack = "att-id";

  std::vector<const FileSpec *> files;
  for (const auto &f : setup.benign)
    files.push_back(&f);
  for (const auto &f : setup.malicious)
    files.push_back(&f);
  if (files.empty())
  {
    result.trace.warnings.push_back("F_B and F_M are empty; result is vacuous");
    result.feasible = true;
    return result;
  }
  if (!bench.adversary().can_eavesdrop())
    result.trace.warnings.push_back(std::string("adversary ") +
                                    adversary::to_string(setup.adversary.archetype) +
                                    " cannot eavesdrop");

  for (const auto *f : files)
  {
    FileTrace ft;
    ft.file_id = f->id;
    auto on_e1 = bench.deploy(*f, "e1", {});
    auto on_e2 = bench.deploy(*f, "e2", {});
    ft.observed_e1 = bench.observed_lookup(on_e1);
    ft.observed_e2 = bench.observed_lookup(on_e2);
    const bool match = ft.observed_e1 && ft.observed_e2 && *ft.observed_e1 == *ft.observed_e2;
    result.trace.files.push_back(ft);
    if (!match)
    {
      result.trace.failure = "signatures observed for " + f->id + " differ between endpoints";
      result.feasible = false;
      return result;
    }
  }
  result.feasible = true;
  return result;
}

ValidationResult validate_att_fa(const ValidationSetup &setup)
{
  return validate_flip(setup, setup.benign, true, "att-fa");
}

ValidationResult validate_att_s(const ValidationSetup &setup)
{
  for (const auto &f : setup.malicious)
    if (!setup.registry.is_malicious(dialect::signature_for(setup.dialect, f.content).hex()))
      throw SetupError("registry does not mark " + f.id + " malicious");
  return validate_flip(setup, setup.malicious, false, "att-s");
}

ValidationResult run_validation(Attack attack, const ValidationSetup &setup)
{
  switch (attack)
  {
  case Attack::InformationDisclosure: return validate_att_id(setup);
  case Attack::FalseAlert: return validate_att_fa(setup);
  case Attack::Silencing: return validate_att_s(setup);
  }
  throw SetupError("unknown attack");
}

std::vector<Forgery> default_candidate_responses(const service::Registry &registry)
{
  const auto &d = registry.dialect;
  std::vector<wire::Ipv4> addrs;
  auto add = [&](const wire::Ipv4 &a) {
    if (std::find(addrs.begin(), addrs.end(), a) == addrs.end())
      addrs.push_back(a);
  };
  std::vector<Forgery> out;
  switch (d.kind)
  {
  case Kind::MHR:
    out.push_back(Forgery{Forgery::Kind::NxDomain, {}, {}});
    for (const auto &a : d.malicious_responses)
      add(a);
    break;
  case Kind::MalwareDB:
    for (const auto &a : d.benign_responses)
      add(a);
    add(dialect::kNessusConnectivityOk);
    for (const auto &[hex, entry] : registry.entries)
      if (entry.classification == service::Classification::Malicious && entry.nessus_report)
        add(dialect::encode_nessus_report(*entry.nessus_report, 0b001));
    break;
  case Kind::GTI:
    for (const auto &a : d.benign_responses)
      add(a);
    for (const auto &a : d.malicious_responses)
      add(a);
    break;
  }
  for (const auto &a : addrs)
    out.push_back(Forgery{Forgery::Kind::A, a, {}});
  return out;
}

namespace
{

wire::Bytes pseudo_file(sim::Rng &rng, std::string_view magic, std::size_t size)
{
  wire::Bytes b(magic.begin(), magic.end());
  while (b.size() < size)
    b.push_back(static_cast<std::uint8_t>(rng.next() & 0xff));
  return b;
}

} // namespace

Fixture make_fixture(Kind kind, std::uint64_t seed)
{
  Fixture fx;
  fx.dialect = Dialect::defaults(kind);
  fx.registry.dialect = fx.dialect;
  sim::Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(kind));

  // Ten benign office documents on every endpoint; malicious set sizes follow
  // the lab's per-vendor sample counts.
  for (int i = 0; i < 10; ++i)
  {
    char name[32];
    std::snprintf(name, sizeof name, "document-%02d.docx", i);
    fx.benign.push_back(FileSpec{name, pseudo_file(rng, "PK\x03\x04", 512 + rng.below(1024))});
  }
  const int n_malicious = kind == Kind::GTI ? 10 : (kind == Kind::MalwareDB ? 7 : 5);
  for (int i = 0; i < n_malicious; ++i)
  {
    char name[32];
    std::snprintf(name, sizeof name, "sample-%02d.exe", i);
    FileSpec f{name, pseudo_file(rng, "MZ", 2048 + rng.below(2048))};
    service::RegistryEntry e;
    e.classification = service::Classification::Malicious;
    e.label = "Sample.Trojan." + std::to_string(i);
    if (kind == Kind::MalwareDB)
    {
      if (i == 0)
      {
        e.nessus_report = dialect::NessusReport{16, 5, 0x8480};
      }
      else
      {
        auto flagged = static_cast<std::uint8_t>(1 + i % 5);
        std::uint16_t flags = 0;
        for (int b = 0; b < flagged; ++b)
          flags |= static_cast<std::uint16_t>(1u << (15 - (b * 3 + i) % 16));
        e.nessus_report = dialect::NessusReport{static_cast<std::uint8_t>(16 + i % 8), flagged, flags};
      }
    }
    fx.registry.add(dialect::signature_for(fx.dialect, f.content), e);
    fx.malicious.push_back(std::move(f));
  }
  return fx;
}

ValidationSetup make_setup(const Fixture &fixture, CountermeasureMode mode, Archetype archetype,
                           double success_prob, std::uint64_t seed, const fs::path &work_dir)
{
  ValidationSetup s;
  s.dialect = fixture.dialect;
  s.benign = fixture.benign;
  s.malicious = fixture.malicious;
  s.registry = fixture.registry;
  s.candidate_responses = default_candidate_responses(fixture.registry);
  s.policy = agent::AgentPolicy::defaults(fixture.dialect);
  s.countermeasure = mode;
  s.adversary.archetype = archetype;
  s.adversary.success_prob = archetype == Archetype::MITM ? 1.0 : success_prob;
  s.adversary.rng_seed = seed;
  s.adversary.capture = true;
  s.seed = seed;
  s.work_dir = work_dir;
  return s;
}

const MatrixCell *ResultTable::find(Attack attack, Kind dialect, std::string_view mode,
                                    Archetype archetype) const
{
  for (const auto &c : cells)
    if (c.attack == attack && c.dialect == dialect && c.mode == mode && c.archetype == archetype)
      return &c;
  return nullptr;
}

namespace
{

std::string cell_value(const MatrixCell &c)
{
  if (!c.result)
    return "error";
  return *c.result ? "true" : "false";
}

} // namespace

std::string ResultTable::to_csv() const
{
  std::ostringstream out;
  out << "attack,dialect,countermeasure,archetype,result\n";
  for (const auto &c : cells)
    out << to_string(c.attack) << "," << dialect::to_string(c.dialect) << "," << c.mode << ","
        << adversary::to_string(c.archetype) << "," << cell_value(c) << "\n";
  return out.str();
}

std::string ResultTable::to_pretty() const
{
  // One block per (countermeasure, archetype); rows are attacks, columns dialects.
  std::vector<std::pair<std::string, Archetype>> blocks;
  std::vector<Attack> attacks;
  std::vector<Kind> dialects;
  for (const auto &c : cells)
  {
    auto key = std::make_pair(c.mode, c.archetype);
    if (std::find(blocks.begin(), blocks.end(), key) == blocks.end())
      blocks.push_back(key);
    if (std::find(attacks.begin(), attacks.end(), c.attack) == attacks.end())
      attacks.push_back(c.attack);
    if (std::find(dialects.begin(), dialects.end(), c.dialect) == dialects.end())
      dialects.push_back(c.dialect);
  }
  std::ostringstream out;
  for (const auto &[mode, arch] : blocks)
  {
    out << "countermeasure=" << mode << " adversary=" << adversary::to_string(arch) << "\n";
    out << std::left << std::setw(10) << "attack";
    for (auto d : dialects)
      out << std::setw(12) << dialect::to_string(d);
    out << "\n";
    for (auto a : attacks)
    {
      out << std::setw(10) << to_string(a);
      for (auto d : dialects)
      {
        const auto *c = find(a, d, mode, arch);
        std::string mark = !c ? "-" : (!c->result ? "error" : (*c->result ? "vuln" : "safe"));
        out << std::setw(12) << mark;
      }
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

std::string ResultTable::traces_jsonl() const
{
  std::ostringstream out;
  for (const auto &c : cells)
  {
    nlohmann::ordered_json head;
    head["cell"] = {{"attack", to_string(c.attack)},
                    {"dialect", dialect::to_string(c.dialect)},
                    {"countermeasure", c.mode},
                    {"archetype", adversary::to_string(c.archetype)},
                    {"result", cell_value(c)}};
    if (!c.error.empty())
      head["error"] = c.error;
    out << head.dump() << "\n" << c.trace.to_jsonl();
  }
  return out.str();
}

ResultTable run_matrix(const MatrixConfig &config)
{
  ResultTable table;
  for (auto kind : config.dialects)
  {
    Fixture fx = make_fixture(kind, config.seed);
    for (const auto &mode : config.modes)
      for (auto arch : config.archetypes)
        for (auto attack : config.attacks)
        {
          MatrixCell cell{attack, kind, mode.name(), arch, std::nullopt, {}, {}};
          auto dir = config.work_dir / (std::string(dialect::to_string(kind)) + "-" + mode.name() +
                                        "-" + adversary::to_string(arch) + "-" + to_string(attack));
          try
          {
            auto setup = make_setup(fx, mode, arch, config.lt_success_prob, config.seed, dir);
            auto r = run_validation(attack, setup);
            cell.result = r.feasible;
            cell.trace = std::move(r.trace);
          }
          catch (const SetupError &e)
          {
            cell.error = e.what();
          }
          fs::remove_all(dir);
          table.cells.push_back(std::move(cell));
        }
  }
  return table;
}

} // namespace dnsaml::harness

namespace dnsaml::harness
{

adversary::Dictionary build_dictionary(const agent::AgentPolicy &attacker_agent,
                                       const std::vector<FileSpec> &files, const fs::path &work_dir)
{
  service::Registry empty;
  empty.dialect = attacker_agent.dialect;
  // The attacker owns this service, so its agent trusts the service key.
  service::ServiceConfig svc_cfg;
  svc_cfg.signing_key = crypto::SigningKeyPair::derive(0, "dictionary");
  service::LookupService svc(std::move(empty), svc_cfg);
  auto policy = attacker_agent;
  policy.gti_pubkey = svc_cfg.signing_key.public_key;

  adversary::AdversaryConfig cfg;
  cfg.archetype = Archetype::MITM;
  cfg.eavesdrop_only = true;
  cfg.capture = true;
  Adversary tap(cfg);
  transport::PlainDnsTransport channel(svc, &tap);

  fs::remove_all(work_dir);
  sim::SimClock clock;
  agent::Agent agent(policy, work_dir, channel, clock);

  adversary::Dictionary dict;
  for (const auto &f : files)
  {
    const std::size_t mark = tap.log().size();
    auto path = agent.files_dir() / "probe";
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char *>(f.content.data()),
                static_cast<std::streamsize>(f.content.size()));
    }
    agent.scan_file(path);
    fs::remove(path);
    const auto &entries = tap.log().entries();
    for (std::size_t i = mark; i < entries.size(); ++i)
    {
      const auto &u = entries[i];
      if (u.direction != Direction::ToService || !u.message)
        continue;
      const auto &labels = u.message->question.name.labels();
      // Only the lookup itself, not the GTI confirmation TXT.
      if (labels.empty() || u.message->question.type != wire::RType::A)
        continue;
      dict.emplace(labels.front(), f.id);
      break;
    }
  }
  fs::remove_all(work_dir);
  return dict;
}

DisclosureResult run_disclosure(const ValidationSetup &victim, const std::vector<FileSpec> &scanned,
                                const adversary::Dictionary &dict)
{
  fs::create_directories(victim.work_dir);
  Bench bench(victim);
  for (const auto &f : scanned)
    bench.deploy(f, "victim", {});

  DisclosureResult r;
  r.capture = bench.adversary().log();
  r.hits = adversary::match_traffic(dict, r.capture);
  for (const auto &u : r.capture.entries())
    if (u.direction == Direction::ToService && u.message)
      ++r.victim_queries;
  return r;
}

} // namespace dnsaml::harness
