#pragma once

#include "dnsaml/crypto.hpp"
#include "dnsaml/dialects.hpp"
#include "dnsaml/wire.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnsaml::service
{

using dialect::Dialect;
using dialect::NessusReport;
using dialect::Signature;
using wire::DnsMessage;

enum class ServiceErrc
{
  ParseError,
  SchemeMismatch,
  NotMyZone,
  Malformed,
  BindError,
};

const char *to_string(ServiceErrc code);

class ServiceError : public std::runtime_error
{
public:
  ServiceError(ServiceErrc code, const std::string &what);
  ServiceErrc code() const noexcept { return code_; }

private:
  ServiceErrc code_;
};

enum class Classification
{
  Benign,
  Malicious,
};

struct RegistryEntry
{
  Classification classification{Classification::Benign};
  std::optional<NessusReport> nessus_report;
  std::string label;
};

struct Registry
{
  Dialect dialect;
  std::map<std::string, RegistryEntry> entries; // keyed by signature hex
  std::vector<std::string> warnings;

  const RegistryEntry *find(const std::string &hex) const;
  bool is_malicious(const std::string &hex) const;

  /// Throws if an entry violates the dialect's invariants.
  void add(const Signature &sig, RegistryEntry entry);
};

/// One JSON object per line: {"sig", "class", "report"?, "label"?}.
Registry load_registry(const std::filesystem::path &path, const Dialect &dialect);
Registry parse_registry(std::istream &in, const Dialect &dialect);
void write_registry(std::ostream &out, const Registry &registry);

struct ServiceConfig
{
  std::uint32_t ttl{300};
  // Sign every response (application-layer signing countermeasure).
  bool sign_all_responses{false};
  // Signs GTI confirmation TXT payloads and, when enabled, all responses.
  crypto::SigningKeyPair signing_key;
};

class LookupService
{
public:
  LookupService(Registry registry, ServiceConfig config);

  /// Throws NotMyZone or Malformed.
  DnsMessage handle_query(const DnsMessage &query) const;

  /// Wire-level entry point shared by the UDP loop and in-process channels.
  /// Returns nullopt when the datagram should be dropped.
  std::optional<wire::Bytes> handle_datagram(std::span<const std::uint8_t> datagram) const;

  const Registry &registry() const noexcept { return registry_; }
  const ServiceConfig &config() const noexcept { return config_; }
  const crypto::PublicKey &public_key() const noexcept { return config_.signing_key.public_key; }

private:
  DnsMessage answer(const DnsMessage &query) const;

  Registry registry_;
  ServiceConfig config_;
};

struct UdpCounters
{
  std::atomic<std::uint64_t> answered{0};
  std::atomic<std::uint64_t> servfail{0};
  std::atomic<std::uint64_t> dropped{0};
};

/// Blocking UDP responder on a loopback or configured address.
class UdpServer
{
public:
  UdpServer(const LookupService &service, const std::string &address, std::uint16_t port);
  ~UdpServer();
  UdpServer(const UdpServer &) = delete;
  UdpServer &operator=(const UdpServer &) = delete;

  /// Actual bound port (useful with port 0).
  std::uint16_t port() const noexcept { return port_; }

  /// Serves until stop() is called.
  void run();
  void stop() noexcept { stopping_ = true; }

  const UdpCounters &counters() const noexcept { return counters_; }

private:
  const LookupService &service_;
  int fd_{-1};
  std::uint16_t port_{0};
  std::atomic<bool> stopping_{false};
  UdpCounters counters_;
};

/// Sends one datagram and waits for the reply; nullopt on timeout.
std::optional<wire::Bytes> udp_exchange(const std::string &address, std::uint16_t port,
                                        std::span<const std::uint8_t> payload,
                                        std::chrono::milliseconds timeout);

} // namespace dnsaml::service
