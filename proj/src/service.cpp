#include "dnsaml/service.hpp"

#include "dnsaml/signing.hpp"

#include "json.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>

namespace dnsaml::service
{

using dialect::Kind;
using wire::DnsName;
using wire::RCode;
using wire::ResourceRecord;
using wire::RType;

const char *to_string(ServiceErrc code)
{
  switch (code)
  {
  case ServiceErrc::ParseError: return "ParseError";
  case ServiceErrc::SchemeMismatch: return "SchemeMismatch";
  case ServiceErrc::NotMyZone: return "NotMyZone";
  case ServiceErrc::Malformed: return "Malformed";
  case ServiceErrc::BindError: return "BindError";
  }
  return "Unknown";
}

ServiceError::ServiceError(ServiceErrc code, const std::string &what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

const RegistryEntry *Registry::find(const std::string &hex) const
{
  auto it = entries.find(hex);
  return it == entries.end() ? nullptr : &it->second;
}

bool Registry::is_malicious(const std::string &hex) const
{
  const auto *e = find(hex);
  return e && e->classification == Classification::Malicious;
}

void Registry::add(const Signature &sig, RegistryEntry entry)
{
  if (sig.scheme() != dialect.hash_scheme)
    throw ServiceError(ServiceErrc::SchemeMismatch,
                       "signature scheme " + std::string(dialect::to_string(sig.scheme())) +
                           " does not match " + dialect::to_string(dialect.hash_scheme));
  if (dialect.kind == Kind::MalwareDB && entry.classification == Classification::Malicious)
  {
    if (!entry.nessus_report || entry.nessus_report->engines_flagged < 1)
      throw ServiceError(ServiceErrc::ParseError,
                         "malicious MalwareDB entry " + sig.hex() + " needs a report with flagged >= 1");
    if (!entry.nessus_report->coherent())
      throw ServiceError(ServiceErrc::ParseError, "incoherent report for " + sig.hex());
  }
  auto [it, inserted] = entries.insert_or_assign(sig.hex(), std::move(entry));
  if (!inserted)
    warnings.push_back("duplicate signature " + sig.hex() + ", last entry wins");
}

Registry parse_registry(std::istream &in, const Dialect &dialect)
{
  Registry reg;
  reg.dialect = dialect;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto fail = [&](const std::string &why) {
      return ServiceError(ServiceErrc::ParseError, "line " + std::to_string(lineno) + ": " + why);
    };
    nlohmann::json j;
    try
    {
      j = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::exception &e)
    {
      throw fail(e.what());
    }
    if (!j.is_object() || !j.contains("sig") || !j["sig"].is_string())
      throw fail("missing \"sig\"");

    std::optional<Signature> sig;
    try
    {
      sig.emplace(j["sig"].get<std::string>(), dialect.hash_scheme);
    }
    catch (const dialect::DialectError &e)
    {
      throw fail(e.what());
    }

    RegistryEntry entry;
    std::string cls = j.value("class", "malicious");
    if (cls == "malicious")
      entry.classification = Classification::Malicious;
    else if (cls == "benign")
      entry.classification = Classification::Benign;
    else
      throw fail("class must be \"malicious\" or \"benign\"");
    entry.label = j.value("label", "");
    if (j.contains("report"))
    {
      const auto &r = j["report"];
      try
      {
        NessusReport report;
        report.engines_total = r.at("total").get<std::uint8_t>();
        report.engines_flagged = r.at("flagged").get<std::uint8_t>();
        auto flags = r.value("flags", std::string("0000"));
        report.engine_flags = static_cast<std::uint16_t>(std::stoul(flags, nullptr, 16));
        entry.nessus_report = report;
      }
      catch (const std::exception &e)
      {
        throw fail(std::string("bad report: ") + e.what());
      }
    }
    try
    {
      reg.add(*sig, std::move(entry));
    }
    catch (const ServiceError &e)
    {
      if (e.code() == ServiceErrc::SchemeMismatch)
        throw;
      throw fail(e.what());
    }
  }
  for (const auto &w : reg.warnings)
    std::cerr << "registry: " << w << "\n";
  return reg;
}

Registry load_registry(const std::filesystem::path &path, const Dialect &dialect)
{
  std::ifstream in(path);
  if (!in)
    throw ServiceError(ServiceErrc::ParseError, "cannot open registry " + path.string());
  return parse_registry(in, dialect);
}

void write_registry(std::ostream &out, const Registry &registry)
{
  for (const auto &[hex, entry] : registry.entries)
  {
    nlohmann::ordered_json j;
    j["sig"] = hex;
    j["class"] = entry.classification == Classification::Malicious ? "malicious" : "benign";
    if (entry.nessus_report)
    {
      char flags[5];
      std::snprintf(flags, sizeof flags, "%04x", entry.nessus_report->engine_flags);
      j["report"] = {{"total", entry.nessus_report->engines_total},
                     {"flagged", entry.nessus_report->engines_flagged},
                     {"flags", flags}};
    }
    if (!entry.label.empty())
      j["label"] = entry.label;
    out << j.dump() << "\n";
  }
}

LookupService::LookupService(Registry registry, ServiceConfig config)
    : registry_(std::move(registry)), config_(std::move(config))
{
}

DnsMessage LookupService::handle_query(const DnsMessage &query) const
{
  DnsMessage resp = answer(query);
  if (config_.sign_all_responses)
    signing::sign_message(config_.signing_key.secret_key, resp, config_.ttl);
  return resp;
}

DnsMessage LookupService::answer(const DnsMessage &query) const
{
  if (query.is_response)
    throw ServiceError(ServiceErrc::Malformed, "received a response, expected a query");
  const Dialect &d = registry_.dialect;
  const DnsName &qname = query.question.name;
  const DnsName *zone = d.owning_zone(qname);
  if (!zone)
    throw ServiceError(ServiceErrc::NotMyZone, qname.to_string());

  auto rel = qname.relative_to(*zone);
  if (rel.size() != 1)
    throw ServiceError(ServiceErrc::Malformed,
                       "expected one label before the zone in " + qname.to_string());
  const std::string &label = rel.front();
  const std::uint32_t ttl = config_.ttl;
  const RType qtype = query.question.type;

  if (d.kind == Kind::MalwareDB && label == dialect::kNessusCheckLabel)
  {
    if (qtype != RType::A)
      throw ServiceError(ServiceErrc::Malformed, "connectivity check must be an A query");
    return wire::make_response(query, {ResourceRecord::a(qname, dialect::kNessusConnectivityOk, ttl)},
                               RCode::NoError);
  }

  try
  {
    Signature check(label, d.hash_scheme);
  }
  catch (const dialect::DialectError &e)
  {
    throw ServiceError(ServiceErrc::Malformed, e.what());
  }
  const RegistryEntry *entry = registry_.find(label);
  bool malicious = entry && entry->classification == Classification::Malicious;

  switch (d.kind)
  {
  case Kind::MHR:
    if (!malicious)
      return wire::make_response(query, {}, RCode::NxDomain);
    if (qtype == RType::TXT)
      return wire::make_response(
          query, {ResourceRecord::txt(qname, {"malicious " + (entry->label.empty() ? label : entry->label)}, ttl)},
          RCode::NoError);
    return wire::make_response(query, {ResourceRecord::a(qname, d.malicious_responses.empty() ? dialect::kMhrMalicious : d.malicious_responses.front(), ttl)},
                               RCode::NoError);

  case Kind::MalwareDB:
  {
    if (qtype != RType::A)
      throw ServiceError(ServiceErrc::Malformed, "MalwareDB answers A queries only");
    wire::Ipv4 addr = d.benign_responses.empty() ? dialect::kNessusBenignA : d.benign_responses.front();
    if (malicious)
      addr = dialect::encode_nessus_report(*entry->nessus_report, 0b001);
    return wire::make_response(query, {ResourceRecord::a(qname, addr, ttl)}, RCode::NoError);
  }

  case Kind::GTI:
  {
    const wire::Ipv4 deletion =
        d.malicious_responses.empty() ? dialect::kGtiDeletion : d.malicious_responses.front();
    if (qtype == RType::TXT)
    {
      if (!malicious)
        return wire::make_response(query, {}, RCode::NxDomain);
      wire::Bytes rdata(deletion.begin(), deletion.end());
      auto txt = signing::sign_response(config_.signing_key.secret_key, qname,
                                        static_cast<std::uint8_t>(RType::A), rdata, ttl);
      return wire::make_response(query, {txt}, RCode::NoError);
    }
    wire::Ipv4 addr = malicious ? deletion
                                : (d.benign_responses.empty() ? dialect::kGtiBenign
                                                              : d.benign_responses.front());
    return wire::make_response(query, {ResourceRecord::a(qname, addr, ttl)}, RCode::NoError);
  }
  }
  throw ServiceError(ServiceErrc::Malformed, "unknown dialect");
}

std::optional<wire::Bytes> LookupService::handle_datagram(std::span<const std::uint8_t> datagram) const
{
  std::uint16_t id = 0;
  if (!wire::peek_header(datagram, id))
    return std::nullopt;
  std::optional<DnsMessage> query;
  try
  {
    query = wire::decode_message(datagram);
    if (!query->is_response)
      return wire::encode_message(handle_query(*query));
  }
  catch (const std::exception &)
  {
  }
  if (query && !query->is_response)
  {
    try
    {
      return wire::encode_message(wire::make_response(*query, {}, RCode::ServFail));
    }
    catch (const std::exception &)
    {
    }
  }
  // Only the header is usable: bare SERVFAIL echoing the id.
  wire::Bytes out(datagram.begin(), datagram.begin() + wire::kHeaderSize);
  out[2] = static_cast<std::uint8_t>(0x80 | 0x04 | (out[2] & 0x01));
  out[3] = static_cast<std::uint8_t>(RCode::ServFail);
  std::fill(out.begin() + 4, out.end(), 0);
  return out;
}

UdpServer::UdpServer(const LookupService &service, const std::string &address, std::uint16_t port)
    : service_(service)
{
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0)
    throw ServiceError(ServiceErrc::BindError, std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, address.c_str(), &addr.sin_addr) != 1)
  {
    ::close(fd_);
    throw ServiceError(ServiceErrc::BindError, "bad bind address " + address);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0)
  {
    int err = errno;
    ::close(fd_);
    throw ServiceError(ServiceErrc::BindError,
                       address + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

UdpServer::~UdpServer()
{
  if (fd_ >= 0)
    ::close(fd_);
}

void UdpServer::run()
{
  std::uint8_t buf[1500];
  while (!stopping_)
  {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, 50);
    if (rc <= 0)
      continue;
    sockaddr_in peer{};
    socklen_t plen = sizeof peer;
    ssize_t n = ::recvfrom(fd_, buf, sizeof buf, 0, reinterpret_cast<sockaddr *>(&peer), &plen);
    if (n < 0)
      continue;
    auto reply = service_.handle_datagram(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    if (!reply)
    {
      ++counters_.dropped;
      continue;
    }
    if (((*reply)[3] & 0x0f) == static_cast<std::uint8_t>(RCode::ServFail))
      ++counters_.servfail;
    else
      ++counters_.answered;
    ::sendto(fd_, reply->data(), reply->size(), 0, reinterpret_cast<sockaddr *>(&peer), plen);
  }
}

std::optional<wire::Bytes> udp_exchange(const std::string &address, std::uint16_t port,
                                        std::span<const std::uint8_t> payload,
                                        std::chrono::milliseconds timeout)
{
  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0)
    return std::nullopt;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  ::inet_pton(AF_INET, address.c_str(), &addr.sin_addr);
  std::optional<wire::Bytes> result;
  if (::sendto(fd, payload.data(), payload.size(), 0, reinterpret_cast<sockaddr *>(&addr),
               sizeof addr) == static_cast<ssize_t>(payload.size()))
  {
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(timeout.count())) > 0)
    {
      std::uint8_t buf[1500];
      ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n >= 0)
        result = wire::Bytes(buf, buf + n);
    }
  }
  ::close(fd);
  return result;
}

} // namespace dnsaml::service
