#include "dnsaml/agent.hpp"

#include "dnsaml/signing.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dnsaml::agent
{

using dialect::Kind;
using dialect::VerdictClass;
using wire::RCode;
using wire::RType;

const char *to_string(AgentAction a)
{
  switch (a)
  {
  case AgentAction::Ignore: return "ignore";
  case AgentAction::Alert: return "alert";
  case AgentAction::Quarantine: return "quarantine";
  case AgentAction::Delete: return "delete";
  }
  return "?";
}

AgentAction parse_action(std::string_view text)
{
  if (text == "ignore") return AgentAction::Ignore;
  if (text == "alert") return AgentAction::Alert;
  if (text == "quarantine") return AgentAction::Quarantine;
  if (text == "delete") return AgentAction::Delete;
  throw std::invalid_argument("unknown action '" + std::string(text) + "'");
}

const char *to_string(ScanStatus s)
{
  switch (s)
  {
  case ScanStatus::Completed: return "completed";
  case ScanStatus::ResolverTimeout: return "resolver_timeout";
  case ScanStatus::MalformedResponse: return "malformed_response";
  case ScanStatus::IoError: return "io_error";
  }
  return "?";
}

AgentPolicy AgentPolicy::defaults(const Dialect &dialect)
{
  AgentPolicy p;
  p.dialect = dialect;
  switch (dialect.kind)
  {
  case Kind::MHR: p.on_malicious = AgentAction::Alert; break;
  case Kind::MalwareDB:
    p.on_malicious = AgentAction::Alert;
    p.error_silent = true;
    break;
  case Kind::GTI: p.on_malicious = AgentAction::Delete; break;
  }
  return p;
}

void AgentPolicy::validate() const
{
  dialect.validate();
  if (!is_malicious_action(on_malicious))
    throw std::invalid_argument("on_malicious must be alert, quarantine or delete");
  if (dialect.kind == Kind::GTI && on_malicious == AgentAction::Delete && verify_confirmation &&
      !gti_pubkey)
    throw std::invalid_argument("GTI deletion with confirmation checking needs a verification key");
}

Signature compute_signature(const AgentPolicy &policy, std::span<const std::uint8_t> content)
{
  return dialect::signature_for(policy.dialect, content, policy.endpoint_salt);
}

void prepare_sandbox(const fs::path &root)
{
  fs::create_directories(root / "files");
  fs::create_directories(root / "quarantine");
}

Agent::Agent(AgentPolicy policy, fs::path sandbox_root, transport::Transport &transport,
             sim::SimClock &clock, std::uint16_t first_query_id)
    : policy_(std::move(policy)), root_(fs::weakly_canonical(sandbox_root)), transport_(transport),
      clock_(clock), next_id_(first_query_id)
{
  policy_.validate();
  prepare_sandbox(root_);
}

bool Agent::inside_sandbox(const fs::path &p) const
{
  auto canon = fs::weakly_canonical(p);
  auto [root_end, _] = std::mismatch(root_.begin(), root_.end(), canon.begin(), canon.end());
  return root_end == root_.end() && canon != root_;
}

DnsMessage Agent::resolve(const DnsMessage &query)
{
  const bool use_cache = policy_.cache_ttl_respected && transport_.supports_agent_cache();
  auto key = std::make_pair(query.question.name.to_lower_string(),
                            static_cast<std::uint16_t>(query.question.type));
  if (use_cache)
  {
    auto it = cache_.find(key);
    if (it != cache_.end())
    {
      if (it->second.expires_at > clock_.now())
      {
        ++transport_.metrics().cache_hits;
        DnsMessage hit = it->second.response;
        hit.id = query.id;
        return hit;
      }
      cache_.erase(it);
    }
  }

  auto response = transport_.exchange(query);
  const std::string qname = query.question.name.to_string();
  if (!response || !response->is_response || response->id != query.id ||
      !(response->question == query.question))
    throw ResolverTimeout(qname);
  if (policy_.response_pubkey &&
      signing::verify_message(*policy_.response_pubkey, *response) != signing::VerifyResult::Accepted)
    throw ResolverTimeout(qname);

  if (use_cache && response->rcode == RCode::NoError && !response->answers.empty())
  {
    std::uint32_t ttl = response->answers.front().ttl;
    for (const auto &rr : response->answers)
      ttl = std::min(ttl, rr.ttl);
    if (ttl > 0)
      cache_[key] = CacheEntry{*response, clock_.now() + ttl};
  }
  return *response;
}

bool Agent::connectivity_check(std::string &why)
{
  auto query = wire::make_query(next_id_++, policy_.dialect.zone.prepend(dialect::kNessusCheckLabel),
                                RType::A);
  try
  {
    auto resp = resolve(query);
    bool ok = resp.rcode == RCode::NoError &&
              std::any_of(resp.answers.begin(), resp.answers.end(),
                          [](const auto &rr) { return rr.type == RType::A; });
    if (!ok)
      why = std::string("connectivity check answered ") + wire::to_string(resp.rcode);
    return ok;
  }
  catch (const ResolverTimeout &e)
  {
    why = e.what();
    return false;
  }
}

void Agent::confirm_deletion(const Signature &sig, const DnsMessage &lookup, ScanOutcome &out)
{
  const auto *zone = policy_.dialect.owning_zone(lookup.question.name);
  auto txt_query = dialect::gti_confirmation_query(sig, zone ? *zone : policy_.dialect.zone, next_id_++);
  std::optional<DnsMessage> txt;
  try
  {
    txt = resolve(txt_query);
  }
  catch (const ResolverTimeout &)
  {
    out.notes.push_back("confirmation query timed out");
  }
  if (!policy_.verify_confirmation)
    return;

  bool valid = false;
  if (txt && txt->rcode == RCode::NoError)
  {
    const wire::Ipv4 *deleted = nullptr;
    for (const auto &rr : out.response->answers)
      if ((deleted = rr.ipv4()))
        break;
    wire::Bytes rdata = deleted ? wire::Bytes(deleted->begin(), deleted->end()) : wire::Bytes{};
    for (const auto &rr : txt->answers)
      if (rr.type == RType::TXT &&
          signing::verify_record(*policy_.gti_pubkey, rr, lookup.question.name,
                                 static_cast<std::uint8_t>(RType::A), rdata))
        valid = true;
  }
  if (!valid)
  {
    out.notes.push_back("confirmation failed");
    out.action = AgentAction::Ignore;
  }
}

void Agent::apply(AgentAction action, const fs::path &path, ScanOutcome &out)
{
  switch (action)
  {
  case AgentAction::Ignore: break;
  case AgentAction::Alert: alerts_.push_back(out); break;
  case AgentAction::Delete:
    fs::remove(path);
    alerts_.push_back(out);
    break;
  case AgentAction::Quarantine:
  {
    fs::create_directories(quarantine_dir());
    auto target = quarantine_dir() / path.filename();
    if (!inside_sandbox(target))
      throw SandboxViolation("quarantine target escapes sandbox: " + target.string());
    fs::rename(path, target);
    alerts_.push_back(out);
    break;
  }
  }
}

ScanOutcome Agent::scan_file(const fs::path &path)
{
  if (!inside_sandbox(path))
    throw SandboxViolation(path.string() + " is outside sandbox " + root_.string());

  ScanOutcome out;
  out.file_id = fs::weakly_canonical(path).lexically_relative(root_).generic_string();

  wire::Bytes content;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
      out.status = ScanStatus::IoError;
      out.notes.push_back("cannot read file");
      return out;
    }
    content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad())
    {
      out.status = ScanStatus::IoError;
      out.notes.push_back("read error");
      return out;
    }
  }

  Signature sig = compute_signature(policy_, content);
  out.signature = sig;
  out.query = dialect::build_lookup_query(policy_.dialect, sig, RType::A, next_id_++);

  try
  {
    out.response = resolve(*out.query);
  }
  catch (const ResolverTimeout &e)
  {
    out.status = ScanStatus::ResolverTimeout;
    out.notes.push_back(e.what());
    return out;
  }

  try
  {
    out.verdict = dialect::parse_lookup_response(policy_.dialect, *out.response);
  }
  catch (const dialect::DialectError &e)
  {
    out.status = ScanStatus::MalformedResponse;
    out.notes.push_back(e.what());
    return out;
  }

  const bool malicious = out.verdict->verdict == VerdictClass::Malicious;
  out.action = malicious ? policy_.on_malicious : AgentAction::Ignore;
  if (malicious && out.verdict->confirmation_required)
    confirm_deletion(sig, *out.query, out);
  if (malicious && policy_.dialect.kind == Kind::MalwareDB)
    out.report_url = dialect::report_url(sig);

  apply(*out.action, path, out);
  return out;
}

ScanReport Agent::scan_directory(const fs::path &dir)
{
  if (!fs::is_directory(dir))
    throw std::runtime_error("IoError: " + dir.string() + " is not a directory");
  ScanReport report;

  if (policy_.dialect.kind == Kind::MalwareDB)
  {
    std::string why;
    if (!connectivity_check(why) && !policy_.error_silent)
    {
      report.summary.aborted = true;
      report.summary.abort_reason = why;
      return report;
    }
  }

  std::vector<fs::path> files;
  const auto quarantine = fs::weakly_canonical(quarantine_dir());
  for (auto it = fs::recursive_directory_iterator(dir); it != fs::recursive_directory_iterator(); ++it)
  {
    if (it->is_directory() && fs::weakly_canonical(it->path()) == quarantine)
    {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file())
      files.push_back(it->path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path &a, const fs::path &b) { return a.generic_string() < b.generic_string(); });

  for (const auto &f : files)
  {
    ScanOutcome o = scan_file(f);
    auto &s = report.summary;
    ++s.files;
    if (!o.action)
    {
      if (!policy_.error_silent)
        ++s.errors;
    }
    else
    {
      switch (*o.action)
      {
      case AgentAction::Ignore: ++s.ignored; break;
      case AgentAction::Alert: ++s.alerts; break;
      case AgentAction::Quarantine: ++s.quarantined; break;
      case AgentAction::Delete: ++s.deleted; break;
      }
    }
    report.outcomes.push_back(std::move(o));
  }
  return report;
}

std::string ScanReport::to_jsonl() const
{
  std::ostringstream out;
  for (const auto &o : outcomes)
  {
    nlohmann::ordered_json j;
    j["file"] = o.file_id;
    j["signature"] = o.signature ? o.signature->hex() : "";
    j["qname"] = o.query ? o.query->question.name.to_string() : "";
    if (o.response)
    {
      j["rcode"] = wire::to_string(o.response->rcode);
      auto answers = nlohmann::json::array();
      for (const auto &rr : o.response->answers)
      {
        if (const auto *a = rr.ipv4())
          answers.push_back(std::string("A ") + wire::ipv4_to_string(*a));
        else if (const auto *t = rr.txt_strings())
          answers.push_back("TXT " + (t->empty() ? std::string() : t->front()));
      }
      j["answers"] = answers;
    }
    j["verdict"] = o.verdict ? dialect::to_string(o.verdict->verdict) : "none";
    if (o.verdict && o.verdict->report)
    {
      const auto &r = *o.verdict->report;
      char flags[5];
      std::snprintf(flags, sizeof flags, "%04x", r.engine_flags);
      j["report"] = {{"total", r.engines_total}, {"flagged", r.engines_flagged}, {"flags", flags}};
    }
    j["action"] = o.action ? to_string(*o.action) : "none";
    j["status"] = to_string(o.status);
    if (!o.report_url.empty())
      j["report_url"] = o.report_url;
    j["notes"] = o.notes;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::string ScanReport::summary_text() const
{
  std::ostringstream out;
  const auto &s = summary;
  if (s.aborted)
  {
    out << "scan aborted: " << s.abort_reason << "\n";
    return out.str();
  }
  out << "files scanned: " << s.files << "\n"
      << "ignored:       " << s.ignored << "\n"
      << "alerts:        " << s.alerts << "\n"
      << "quarantined:   " << s.quarantined << "\n"
      << "deleted:       " << s.deleted << "\n"
      << "errors:        " << s.errors << "\n";
  return out.str();
}

} // namespace dnsaml::agent
