#include "dnsaml/dialects.hpp"

#include <algorithm>
#include <bit>

namespace dnsaml::dialect
{

using wire::RCode;
using wire::RType;

const char *to_string(DialectErrc code)
{
  switch (code)
  {
  case DialectErrc::InvalidSignature: return "InvalidSignature";
  case DialectErrc::SchemeMismatch: return "SchemeMismatch";
  case DialectErrc::UnsupportedQtype: return "UnsupportedQtype";
  case DialectErrc::MalformedResponse: return "MalformedResponse";
  case DialectErrc::IncoherentReport: return "IncoherentReport";
  }
  return "Unknown";
}

DialectError::DialectError(DialectErrc code, const std::string &what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

const char *to_string(Kind kind)
{
  switch (kind)
  {
  case Kind::MHR: return "mhr";
  case Kind::MalwareDB: return "malwaredb";
  case Kind::GTI: return "gti";
  }
  return "?";
}

const char *to_string(HashScheme scheme)
{
  switch (scheme)
  {
  case HashScheme::MD5: return "md5";
  case HashScheme::SHA1: return "sha1";
  case HashScheme::Custom32Hex: return "custom32hex";
  }
  return "?";
}

Kind parse_kind(std::string_view text)
{
  if (text == "mhr") return Kind::MHR;
  if (text == "malwaredb" || text == "nessus") return Kind::MalwareDB;
  if (text == "gti") return Kind::GTI;
  throw std::invalid_argument("unknown dialect '" + std::string(text) + "'");
}

HashScheme parse_scheme(std::string_view text)
{
  if (text == "md5") return HashScheme::MD5;
  if (text == "sha1") return HashScheme::SHA1;
  if (text == "custom32hex") return HashScheme::Custom32Hex;
  throw std::invalid_argument("unknown hash scheme '" + std::string(text) + "'");
}

Dialect Dialect::defaults(Kind kind)
{
  Dialect d;
  d.kind = kind;
  switch (kind)
  {
  case Kind::MHR:
    d.zone = DnsName::parse("malware.hash.cymru.com.");
    d.hash_scheme = HashScheme::MD5;
    d.malicious_responses = {kMhrMalicious};
    break;
  case Kind::MalwareDB:
    d.zone = DnsName::parse("l2.nessus.org.");
    d.hash_scheme = HashScheme::Custom32Hex;
    d.benign_responses = {kNessusBenignA, kNessusBenignB};
    break;
  case Kind::GTI:
    d.zone = DnsName::parse("avts.mcafee.com.");
    d.alternate_zones = {DnsName::parse("avqs.mcafee.com.")};
    d.hash_scheme = HashScheme::Custom32Hex;
    d.benign_responses = {kGtiBenign};
    d.malicious_responses = {kGtiDeletion};
    break;
  }
  return d;
}

const DnsName *Dialect::owning_zone(const DnsName &qname) const
{
  if (qname.is_subdomain_of(zone))
    return &zone;
  for (const auto &alt : alternate_zones)
    if (qname.is_subdomain_of(alt))
      return &alt;
  return nullptr;
}

void Dialect::validate() const
{
  bool ok = kind == Kind::MHR ? (hash_scheme == HashScheme::MD5 || hash_scheme == HashScheme::SHA1)
                              : hash_scheme == HashScheme::Custom32Hex;
  if (!ok)
    throw DialectError(DialectErrc::SchemeMismatch, std::string(to_string(kind)) +
                                                        " does not use " + to_string(hash_scheme));
}

std::size_t Signature::expected_length(HashScheme scheme)
{
  return scheme == HashScheme::SHA1 ? 40 : 32;
}

Signature::Signature(std::string hex, HashScheme scheme) : hex_(std::move(hex)), scheme_(scheme)
{
  if (hex_.size() != expected_length(scheme_))
    throw DialectError(DialectErrc::InvalidSignature,
                       "signature '" + hex_ + "' must be " +
                           std::to_string(expected_length(scheme_)) + " hex characters");
  bool lower_hex = std::all_of(hex_.begin(), hex_.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
  if (!lower_hex)
    throw DialectError(DialectErrc::InvalidSignature,
                       "signature '" + hex_ + "' is not lowercase hex");
}

Signature signature_for(const Dialect &dialect, std::span<const std::uint8_t> content,
                        std::string_view endpoint_salt)
{
  auto salted = [&](std::string_view salt) {
    wire::Bytes buf(content.begin(), content.end());
    buf.insert(buf.end(), salt.begin(), salt.end());
    buf.insert(buf.end(), endpoint_salt.begin(), endpoint_salt.end());
    return buf;
  };
  switch (dialect.hash_scheme)
  {
  case HashScheme::MD5:
    return Signature(crypto::md5_hex(salted({})), HashScheme::MD5);
  case HashScheme::SHA1:
    return Signature(crypto::sha1_hex(salted({})), HashScheme::SHA1);
  case HashScheme::Custom32Hex:
    return Signature(crypto::md5_hex(salted(dialect.kind == Kind::GTI ? "gti" : "nessus")),
                     HashScheme::Custom32Hex);
  }
  throw DialectError(DialectErrc::SchemeMismatch, "unknown scheme");
}

const char *to_string(VerdictClass c)
{
  switch (c)
  {
  case VerdictClass::Benign: return "benign";
  case VerdictClass::Malicious: return "malicious";
  case VerdictClass::Unknown: return "unknown";
  }
  return "?";
}

bool NessusReport::coherent() const
{
  return engines_total <= 31 && engines_flagged <= 31 && engines_flagged <= engines_total &&
         static_cast<unsigned>(std::popcount(engine_flags)) <= engines_flagged;
}

DnsMessage build_lookup_query(const Dialect &dialect, const Signature &sig, RType qtype,
                              std::uint16_t id)
{
  if (sig.scheme() != dialect.hash_scheme)
    throw DialectError(DialectErrc::SchemeMismatch,
                       std::string(to_string(dialect.kind)) + " expects " +
                           to_string(dialect.hash_scheme) + " signatures, got " +
                           to_string(sig.scheme()));
  if (qtype == RType::TXT && dialect.kind != Kind::MHR)
    throw DialectError(DialectErrc::UnsupportedQtype,
                       std::string("TXT lookups are MHR-only, not ") + to_string(dialect.kind));
  return wire::make_query(id, dialect.zone.prepend(sig.hex()), qtype);
}

namespace
{

const Ipv4 *first_a(const DnsMessage &response)
{
  for (const auto &rr : response.answers)
    if (rr.type == RType::A)
      return rr.ipv4();
  return nullptr;
}

bool contains(const std::vector<Ipv4> &set, const Ipv4 &addr)
{
  return std::find(set.begin(), set.end(), addr) != set.end();
}

} // namespace

Verdict parse_lookup_response(const Dialect &dialect, const DnsMessage &response)
{
  Verdict v;
  v.rcode = response.rcode;
  v.raw = response.answers;

  if (response.rcode == RCode::NxDomain)
  {
    v.verdict = dialect.kind == Kind::MHR ? VerdictClass::Benign : VerdictClass::Unknown;
    return v;
  }

  if (dialect.kind == Kind::MHR && response.question.type == RType::TXT)
  {
    bool has_txt = std::any_of(response.answers.begin(), response.answers.end(),
                               [](const auto &rr) { return rr.type == RType::TXT; });
    if (response.rcode != RCode::NoError || !has_txt)
      throw DialectError(DialectErrc::MalformedResponse, "MHR TXT response without TXT record");
    v.verdict = VerdictClass::Malicious;
    return v;
  }

  const Ipv4 *addr = first_a(response);
  if (response.rcode != RCode::NoError || !addr)
    throw DialectError(DialectErrc::MalformedResponse,
                       std::string(wire::to_string(response.rcode)) + " response for " +
                           response.question.name.to_string() + " carries no A record");

  switch (dialect.kind)
  {
  case Kind::MHR:
  {
    const auto &bad = dialect.malicious_responses.empty() ? std::vector<Ipv4>{kMhrMalicious}
                                                          : dialect.malicious_responses;
    v.verdict = contains(bad, *addr) ? VerdictClass::Malicious : VerdictClass::Unknown;
    break;
  }
  case Kind::MalwareDB:
  {
    NessusReport report = decode_nessus_report(*addr);
    v.report = report;
    v.verdict = report.engines_flagged == 0 ? VerdictClass::Benign : VerdictClass::Malicious;
    break;
  }
  case Kind::GTI:
  {
    const auto &deletion = dialect.malicious_responses.empty() ? std::vector<Ipv4>{kGtiDeletion}
                                                               : dialect.malicious_responses;
    if (contains(deletion, *addr))
    {
      v.verdict = VerdictClass::Malicious;
      v.confirmation_required = true;
    }
    else
    {
      v.verdict = VerdictClass::Benign;
    }
    break;
  }
  }
  return v;
}

NessusReport decode_nessus_report(const Ipv4 &addr)
{
  NessusReport r;
  r.engines_total = addr[0] & 0x1f;
  r.engines_flagged = addr[1] & 0x1f;
  r.engine_flags = static_cast<std::uint16_t>((addr[2] << 8) | addr[3]);
  return r;
}

Ipv4 encode_nessus_report(const NessusReport &report, std::uint8_t prefix_bits)
{
  if (!report.coherent())
    throw DialectError(DialectErrc::IncoherentReport,
                       "report {" + std::to_string(report.engines_total) + ", " +
                           std::to_string(report.engines_flagged) + ", flags popcount " +
                           std::to_string(std::popcount(report.engine_flags)) + "}");
  return Ipv4{static_cast<std::uint8_t>(((prefix_bits & 0x7) << 5) | report.engines_total),
              report.engines_flagged, static_cast<std::uint8_t>(report.engine_flags >> 8),
              static_cast<std::uint8_t>(report.engine_flags & 0xff)};
}

DnsMessage gti_confirmation_query(const Signature &sig, const DnsName &zone, std::uint16_t id)
{
  return wire::make_query(id, zone.prepend(sig.hex()), RType::TXT);
}

std::string report_url(const Signature &sig)
{
  return "http://malwaredb.nessus.org/malware/" + sig.hex();
}

} // namespace dnsaml::dialect
