#include "dnsaml/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dnsaml::scenario
{

using nlohmann::json;

adversary::Forgery parse_forgery(std::string_view text)
{
  using K = adversary::Forgery::Kind;
  adversary::Forgery f;
  std::string s(text);
  auto space = s.find(' ');
  std::string head = s.substr(0, space);
  std::transform(head.begin(), head.end(), head.begin(), ::toupper);
  std::string rest = space == std::string::npos ? "" : s.substr(space + 1);
  if (head == "A")
  {
    f.kind = K::A;
    try
    {
      f.address = wire::parse_ipv4(rest);
    }
    catch (const std::invalid_argument &e)
    {
      throw ScenarioError(e.what());
    }
  }
  else if (head == "NXDOMAIN")
    f.kind = K::NxDomain;
  else if (head == "DROP")
    f.kind = K::Drop;
  else if (head == "TXT")
  {
    f.kind = K::Txt;
    f.txt = {rest};
  }
  else
    throw ScenarioError("cannot parse response '" + s + "'");
  return f;
}

namespace
{

wire::RType parse_rtype(const std::string &s)
{
  if (s == "A" || s == "a")
    return wire::RType::A;
  if (s == "TXT" || s == "txt")
    return wire::RType::TXT;
  throw ScenarioError("unsupported qtype '" + s + "'");
}

adversary::SpoofRule parse_rule(const json &j)
{
  adversary::SpoofRule r;
  auto kind = j.value("match", std::string("any"));
  if (kind == "any")
    r.match.kind = adversary::RuleMatch::Kind::Any;
  else if (kind == "exact")
    r.match.kind = adversary::RuleMatch::Kind::Exact;
  else if (kind == "suffix")
    r.match.kind = adversary::RuleMatch::Kind::Suffix;
  else
    throw ScenarioError("unknown rule match '" + kind + "'");
  if (r.match.kind != adversary::RuleMatch::Kind::Any)
    r.match.name = wire::DnsName::parse(j.at("name").get<std::string>());
  if (j.contains("qtype"))
    r.match.qtype = parse_rtype(j["qtype"].get<std::string>());
  r.forged = parse_forgery(j.at("response").get<std::string>());
  return r;
}

fs::path resolve(const fs::path &base, const std::string &p)
{
  fs::path fp(p);
  return fp.is_absolute() || base.empty() ? fp : base / fp;
}

} // namespace

Scenario Scenario::for_dialect(dialect::Kind kind)
{
  Scenario s;
  s.dialect = dialect::Dialect::defaults(kind);
  s.policy = agent::AgentPolicy::defaults(s.dialect);
  s.adversary.archetype = adversary::Archetype::MITM;
  s.adversary.rng_seed = s.seed;
  return s;
}

Scenario Scenario::load(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw ScenarioError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

Scenario Scenario::parse(std::string_view json_text, const fs::path &base)
{
  json j;
  try
  {
    j = json::parse(json_text);
  }
  catch (const json::exception &e)
  {
    throw ScenarioError(e.what());
  }

  try
  {
    Scenario s = for_dialect(dialect::parse_kind(j.at("dialect").get<std::string>()));
    const bool seed_given = j.contains("seed");
    s.seed = j.value("seed", s.seed);
    if (j.contains("zone"))
      s.dialect.zone = wire::DnsName::parse(j["zone"].get<std::string>());
    s.policy = agent::AgentPolicy::defaults(s.dialect);

    if (j.contains("registry"))
      s.registry_path = resolve(base, j["registry"]);
    if (j.contains("benign_dir"))
      s.benign_dir = resolve(base, j["benign_dir"]);
    if (j.contains("malicious_dir"))
      s.malicious_dir = resolve(base, j["malicious_dir"]);
    if (j.contains("dictionary_dir"))
      s.dictionary_dir = resolve(base, j["dictionary_dir"]);
    if (j.contains("sandbox"))
      s.sandbox = resolve(base, j["sandbox"]);
    else
      s.sandbox = resolve(base, "sandbox");
    if (j.contains("out"))
      s.out = resolve(base, j["out"]);

    if (j.contains("agent"))
    {
      const auto &a = j["agent"];
      if (a.contains("on_malicious"))
        s.policy.on_malicious = agent::parse_action(a["on_malicious"].get<std::string>());
      s.policy.cache_ttl_respected = a.value("cache_ttl_respected", s.policy.cache_ttl_respected);
      s.policy.verify_confirmation = a.value("verify_confirmation", s.policy.verify_confirmation);
      s.policy.error_silent = a.value("error_silent", s.policy.error_silent);
      s.policy.endpoint_salt = a.value("endpoint_salt", s.policy.endpoint_salt);
    }

    bool adversary_seed = false;
    s.adversary.rng_seed = s.seed;
    if (j.contains("adversary"))
    {
      const auto &a = j["adversary"];
      s.adversary.archetype = adversary::parse_archetype(a.value("archetype", std::string("mitm")));
      s.adversary.success_prob = a.value("success_prob", 1.0);
      if (a.contains("rng_seed"))
      {
        s.adversary.rng_seed = a["rng_seed"].get<std::uint64_t>();
        adversary_seed = true;
      }
      s.adversary.capture = a.value("capture", true);
      s.adversary.eavesdrop_only = a.value("eavesdrop_only", false);
      s.adversary.tamper_frames = a.value("tamper_frames", false);
      s.adversary.block_handshakes = a.value("block_handshakes", false);
      if (a.contains("rules"))
        for (const auto &r : a["rules"])
          s.adversary.rules.push_back(parse_rule(r));
    }
    const bool lt = s.adversary.archetype == adversary::Archetype::OPSAM ||
                    s.adversary.archetype == adversary::Archetype::OP;
    if (lt && !seed_given && !adversary_seed)
      throw ScenarioError("an off-path adversary needs a seed");
    if (s.adversary.archetype == adversary::Archetype::MITM)
      s.adversary.success_prob = 1.0;
    s.adversary.validate();

    if (j.contains("countermeasure"))
      s.countermeasure = countermeasures::CountermeasureMode::parse(j["countermeasure"].get<std::string>());
    if (j.contains("scope"))
    {
      auto scope = j["scope"].get<std::string>();
      if (scope == "SP" || scope == "sp")
        s.scope = harness::Scope::Specific;
      else if (scope == "LS" || scope == "ls")
        s.scope = harness::Scope::LargeScale;
      else
        throw ScenarioError("unknown scope '" + scope + "'");
    }
    s.salt_per_endpoint = j.value("salt_per_endpoint", false);
    if (j.contains("candidate_responses"))
    {
      std::vector<adversary::Forgery> r;
      for (const auto &c : j["candidate_responses"])
        r.push_back(parse_forgery(c.get<std::string>()));
      s.candidate_responses = std::move(r);
    }
    s.dialect.validate();
    s.policy.dialect = s.dialect;
    return s;
  }
  catch (const json::exception &e)
  {
    throw ScenarioError(e.what());
  }
  catch (const std::invalid_argument &e)
  {
    throw ScenarioError(e.what());
  }
}

std::vector<harness::FileSpec> read_file_set(const fs::path &dir)
{
  if (!fs::is_directory(dir))
    throw ScenarioError(dir.string() + " is not a directory");
  std::vector<fs::path> paths;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.is_regular_file())
      paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  std::vector<harness::FileSpec> out;
  for (const auto &p : paths)
  {
    std::ifstream in(p, std::ios::binary);
    wire::Bytes content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    out.push_back(harness::FileSpec{p.filename().string(), std::move(content)});
  }
  return out;
}

harness::Fixture Scenario::fixture() const
{
  harness::Fixture fx = harness::make_fixture(dialect.kind, seed);
  fx.dialect = dialect;
  fx.registry.dialect = dialect;
  if (benign_dir)
    fx.benign = read_file_set(*benign_dir);
  if (malicious_dir)
    fx.malicious = read_file_set(*malicious_dir);
  if (registry_path)
    fx.registry = service::load_registry(*registry_path, dialect);
  else if (malicious_dir)
  {
    // No registry given: the files on disk define what the service knows.
    service::Registry reg;
    reg.dialect = dialect;
    for (const auto &f : fx.malicious)
    {
      service::RegistryEntry e;
      e.classification = service::Classification::Malicious;
      e.label = f.id;
      if (dialect.kind == dialect::Kind::MalwareDB)
        e.nessus_report = dialect::NessusReport{16, 5, 0x8480};
      reg.add(dialect::signature_for(dialect, f.content), e);
    }
    fx.registry = std::move(reg);
  }
  return fx;
}

harness::ValidationSetup Scenario::to_setup(const fs::path &work_dir) const
{
  auto fx = fixture();
  auto s = harness::make_setup(fx, countermeasure, adversary.archetype, adversary.success_prob, seed,
                               work_dir);
  s.policy = policy;
  s.adversary = adversary;
  s.adversary.rules.clear();
  s.scope = scope;
  s.salt_per_endpoint = salt_per_endpoint;
  if (candidate_responses)
    s.candidate_responses = *candidate_responses;
  return s;
}

} // namespace dnsaml::scenario
