#pragma once

#include "dnsaml/adversary.hpp"
#include "dnsaml/crypto.hpp"
#include "dnsaml/service.hpp"
#include "dnsaml/wire.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace dnsaml::transport
{

using wire::DnsMessage;

struct OverheadMetrics
{
  std::uint64_t lookups{0};
  std::uint64_t round_trips{0};
  std::uint64_t bytes_on_wire{0};
  std::uint64_t cache_hits{0};
  std::uint64_t handshakes{0};
  std::uint64_t auth_failures{0};
  std::uint64_t timeouts{0};
};

/// Agent-side view of the path to the lookup service. exchange() returns
/// nullopt when nothing usable came back (drop, tamper, timeout).
class Transport
{
public:
  virtual ~Transport() = default;

  virtual std::optional<DnsMessage> exchange(const DnsMessage &query) = 0;
  /// Whether the agent may keep a local answer cache on top of this transport.
  virtual bool supports_agent_cache() const { return true; }
  virtual std::string name() const = 0;

  OverheadMetrics &metrics() noexcept { return metrics_; }
  const OverheadMetrics &metrics() const noexcept { return metrics_; }

protected:
  OverheadMetrics metrics_;
};

/// Plaintext DNS to an in-process service, optionally through an adversary.
/// Every message crosses the channel as RFC 1035 bytes.
class PlainDnsTransport : public Transport
{
public:
  PlainDnsTransport(const service::LookupService &service, adversary::Adversary *adversary);

  std::optional<DnsMessage> exchange(const DnsMessage &query) override;
  std::string name() const override { return "plain-dns"; }

private:
  const service::LookupService &service_;
  adversary::Adversary *adversary_;
};

/// Plaintext DNS over a real UDP socket (see UdpServer).
class UdpTransport : public Transport
{
public:
  UdpTransport(std::string address, std::uint16_t port, std::chrono::milliseconds timeout,
               adversary::Adversary *adversary = nullptr);

  std::optional<DnsMessage> exchange(const DnsMessage &query) override;
  std::string name() const override { return "udp"; }

private:
  std::string address_;
  std::uint16_t port_;
  std::chrono::milliseconds timeout_;
  adversary::Adversary *adversary_;
};

enum class SecureVariant
{
  DoT,
  DoH,
};

struct SecureChannelOptions
{
  SecureVariant variant{SecureVariant::DoT};
  // Fall back to plaintext DNS when the handshake fails.
  bool allow_downgrade{false};
};

inline constexpr std::size_t kSecureFrameSize = 2 + wire::kMaxUdpPayload;

/// Encrypted and authenticated DNS flow: one handshake, then fixed-size frames
/// sealed with a per-flow key derived from the shared secret.
class SecureChannelTransport : public Transport
{
public:
  SecureChannelTransport(const service::LookupService &service, adversary::Adversary *adversary,
                         crypto::AeadKey shared_secret, std::uint64_t flow_nonce,
                         SecureChannelOptions options = {});

  std::optional<DnsMessage> exchange(const DnsMessage &query) override;
  bool supports_agent_cache() const override;
  std::string name() const override;

  bool downgraded() const noexcept { return downgraded_; }

  /// Pads a DNS message to the fixed frame size (2-byte length prefix).
  static wire::Bytes pad_frame(const wire::Bytes &message);
  static std::optional<wire::Bytes> unpad_frame(const wire::Bytes &frame);

private:
  bool handshake();
  crypto::AeadNonce nonce(std::uint8_t direction, std::uint64_t counter) const;

  const service::LookupService &service_;
  adversary::Adversary *adversary_;
  crypto::AeadKey secret_;
  std::uint64_t flow_nonce_;
  SecureChannelOptions options_;
  std::optional<crypto::AeadKey> session_key_;
  bool handshake_failed_{false};
  bool downgraded_{false};
  std::uint64_t counter_{0};
  std::unique_ptr<PlainDnsTransport> fallback_;
};

inline constexpr std::size_t kRestPayloadLimit = 2 * 1024 * 1024;

class PayloadTooLarge : public std::runtime_error
{
public:
  explicit PayloadTooLarge(std::size_t size);
  std::size_t size() const noexcept { return size_; }

private:
  std::size_t size_;
};

struct RestRequest
{
  std::string qname;
  wire::RType qtype{wire::RType::A};
  // Extended metadata (up to the 2 MB request limit).
  wire::Bytes payload;
};

struct RestResponse
{
  DnsMessage answer;
  std::size_t payload_bytes_accepted{0};
};

/// Request/response lookup API over an authenticated encrypted session.
/// No cache layer: every lookup is a round trip.
class RestTransport : public Transport
{
public:
  RestTransport(const service::LookupService &service, adversary::Adversary *adversary,
                crypto::AeadKey shared_secret, std::uint64_t flow_nonce);

  /// Throws PayloadTooLarge when the request exceeds 2 MB.
  std::optional<RestResponse> lookup(const RestRequest &request);

  std::optional<DnsMessage> exchange(const DnsMessage &query) override;
  bool supports_agent_cache() const override { return false; }
  std::string name() const override { return "rest"; }

  static wire::Bytes encode_request(const RestRequest &request);
  static std::optional<RestRequest> decode_request(const wire::Bytes &bytes);

private:
  const service::LookupService &service_;
  adversary::Adversary *adversary_;
  crypto::AeadKey session_key_;
  std::uint64_t counter_{0};
};

} // namespace dnsaml::transport
