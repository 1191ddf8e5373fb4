#include "dnsaml/adversary.hpp"

#include "json.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace dnsaml::adversary
{

using wire::RCode;
using wire::ResourceRecord;

const char *to_string(Archetype a)
{
  switch (a)
  {
  case Archetype::None: return "none";
  case Archetype::MITM: return "mitm";
  case Archetype::OPSAM: return "opsam";
  case Archetype::OP: return "op";
  }
  return "?";
}

const char *to_string(Capability c)
{
  switch (c)
  {
  case Capability::None: return "none";
  case Capability::CE: return "CE";
  case Capability::CE_CT: return "CE+CT";
  case Capability::LT: return "LT";
  }
  return "?";
}

Archetype parse_archetype(std::string_view text)
{
  if (text == "none") return Archetype::None;
  if (text == "mitm") return Archetype::MITM;
  if (text == "opsam") return Archetype::OPSAM;
  if (text == "op") return Archetype::OP;
  throw std::invalid_argument("unknown archetype '" + std::string(text) + "'");
}

const char *to_string(Direction d)
{
  return d == Direction::ToService ? "to_service" : "to_agent";
}

bool RuleMatch::matches(const wire::Question &q) const
{
  if (qtype && *qtype != q.type)
    return false;
  switch (kind)
  {
  case Kind::Any: return true;
  case Kind::Exact: return q.name == name;
  case Kind::Suffix: return q.name.is_subdomain_of(name);
  }
  return false;
}

std::string Forgery::describe() const
{
  switch (kind)
  {
  case Kind::A: return "A " + wire::ipv4_to_string(address);
  case Kind::NxDomain: return "NXDOMAIN";
  case Kind::Txt:
  {
    std::string out = "TXT";
    for (const auto &s : txt)
      out += " \"" + s + "\"";
    return out;
  }
  case Kind::Drop: return "DROP";
  }
  return "?";
}

Capability AdversaryConfig::capability() const
{
  switch (archetype)
  {
  case Archetype::None: return Capability::None;
  case Archetype::MITM: return eavesdrop_only ? Capability::CE : Capability::CE_CT;
  case Archetype::OPSAM:
  case Archetype::OP: return Capability::LT;
  }
  return Capability::None;
}

void AdversaryConfig::validate() const
{
  if (!(success_prob >= 0.0 && success_prob <= 1.0))
    throw std::invalid_argument("success probability must lie in [0, 1]");
}

std::string CaptureLog::to_jsonl() const
{
  std::ostringstream out;
  for (const auto &e : entries_)
  {
    nlohmann::ordered_json j;
    j["tick"] = e.tick;
    j["direction"] = to_string(e.direction);
    j["kind"] = e.kind == UnitKind::Dns ? "dns" : (e.kind == UnitKind::Handshake ? "handshake" : "frame");
    j["hex"] = wire::to_hex(e.bytes);
    if (e.message)
      j["qname"] = e.message->question.name.to_string();
    out << j.dump() << "\n";
  }
  return out.str();
}

Adversary::Adversary(AdversaryConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.rng_seed)
{
  cfg_.validate();
}

bool Adversary::can_eavesdrop() const
{
  auto c = cfg_.capability();
  return cfg_.capture && (c == Capability::CE || c == Capability::CE_CT);
}

bool Adversary::can_tamper() const
{
  auto c = cfg_.capability();
  return c == Capability::CE_CT || c == Capability::LT;
}

bool Adversary::attempt()
{
  ++stats_.attempts;
  bool ok = cfg_.capability() == Capability::CE_CT ? true : rng_.bernoulli(cfg_.success_prob);
  if (ok)
    ++stats_.successes;
  return ok;
}

void Adversary::record(Direction d, UnitKind kind, const wire::Bytes &bytes,
                       std::optional<DnsMessage> msg)
{
  if (can_eavesdrop())
    log_.append(CaptureEntry{d, tick_, kind, bytes, std::move(msg)});
}

std::optional<DnsMessage> Adversary::interpose(const DnsMessage &msg, Direction direction)
{
  ++tick_;
  if (cfg_.archetype == Archetype::None)
    return msg;
  if (can_eavesdrop())
    record(direction, UnitKind::Dns, wire::encode_message(msg), msg);
  if (direction != Direction::ToAgent || !can_tamper())
    return msg;

  auto rule = std::find_if(cfg_.rules.begin(), cfg_.rules.end(),
                           [&](const SpoofRule &r) { return r.match.matches(msg.question); });
  if (rule == cfg_.rules.end())
    return msg;
  if (!attempt())
    return msg;
  return forge_response(msg, rule->forged);
}

std::optional<wire::Bytes> Adversary::interpose_frame(const wire::Bytes &frame, Direction direction,
                                                      UnitKind kind)
{
  ++tick_;
  if (cfg_.archetype == Archetype::None)
    return frame;
  record(direction, kind, frame, std::nullopt);
  if (!can_tamper())
    return frame;
  if (kind == UnitKind::Handshake && cfg_.block_handshakes && attempt())
    return std::nullopt;
  if (kind == UnitKind::Frame && cfg_.tamper_frames && !frame.empty() && attempt())
  {
    wire::Bytes altered = frame;
    altered[altered.size() / 2] ^= 0x01;
    return altered;
  }
  return frame;
}

std::optional<DnsMessage> forge_response(const DnsMessage &original, const Forgery &forged,
                                         std::uint32_t ttl)
{
  DnsMessage q;
  q.id = original.id;
  q.question = original.question;
  const auto &name = original.question.name;
  switch (forged.kind)
  {
  case Forgery::Kind::Drop: return std::nullopt;
  case Forgery::Kind::NxDomain: return wire::make_response(q, {}, RCode::NxDomain);
  case Forgery::Kind::A:
    return wire::make_response(q, {ResourceRecord::a(name, forged.address, ttl)}, RCode::NoError);
  case Forgery::Kind::Txt:
    return wire::make_response(q, {ResourceRecord::txt(name, forged.txt, ttl)}, RCode::NoError);
  }
  return std::nullopt;
}

std::vector<TrafficMatch> match_traffic(const Dictionary &dict, const CaptureLog &log)
{
  std::vector<TrafficMatch> hits;
  for (const auto &e : log.entries())
  {
    if (e.direction != Direction::ToService || !e.message || e.message->is_response)
      continue;
    const auto &labels = e.message->question.name.labels();
    if (labels.empty())
      continue;
    auto it = dict.find(labels.front());
    if (it != dict.end())
      hits.push_back(TrafficMatch{it->second, e.tick});
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const TrafficMatch &a, const TrafficMatch &b) { return a.tick < b.tick; });
  return hits;
}

} // namespace dnsaml::adversary
