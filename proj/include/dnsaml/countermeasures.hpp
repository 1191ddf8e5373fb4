#pragma once

#include "dnsaml/agent.hpp"
#include "dnsaml/signing.hpp"
#include "dnsaml/transport.hpp"

#include <memory>
#include <string>

namespace dnsaml::countermeasures
{

struct CountermeasureMode
{
  enum class Kind
  {
    None,
    AppSigning,
    SecureChannel,
    RestTransport,
  };
  Kind kind{Kind::None};
  transport::SecureVariant variant{transport::SecureVariant::DoT};
  // Agent falls back to plaintext DNS when the secure handshake fails.
  bool downgrade{false};

  static CountermeasureMode none() { return {}; }
  static CountermeasureMode app_signing() { return {Kind::AppSigning}; }
  static CountermeasureMode dot() { return {Kind::SecureChannel, transport::SecureVariant::DoT}; }
  static CountermeasureMode doh() { return {Kind::SecureChannel, transport::SecureVariant::DoH}; }
  static CountermeasureMode doh_with_downgrade()
  {
    return {Kind::SecureChannel, transport::SecureVariant::DoH, true};
  }
  static CountermeasureMode rest() { return {Kind::RestTransport}; }

  /// none | signing | dot | doh | doh-downgrade | dot-downgrade | rest
  std::string name() const;
  static CountermeasureMode parse(std::string_view text);
};

/// Signature TXT over (QNAME, rtype, rdata).
inline wire::ResourceRecord sign_response(const crypto::SecretKey &key, const wire::DnsName &qname,
                                          std::uint8_t rtype, std::span<const std::uint8_t> rdata,
                                          std::uint32_t ttl = 300)
{
  return signing::sign_response(key, qname, rtype, rdata, ttl);
}

inline signing::VerifyResult verify_response(const crypto::PublicKey &key,
                                             const wire::DnsMessage &response)
{
  return signing::verify_message(key, response);
}

/// Key material for one scenario, derived from its seed.
struct KeyMaterial
{
  crypto::SigningKeyPair service_signing;
  crypto::AeadKey channel_secret{};

  static KeyMaterial derive(std::uint64_t seed);
};

/// Service settings implied by the mode (signing turns on response signatures).
service::ServiceConfig service_config_for(const CountermeasureMode &mode, const KeyMaterial &keys,
                                          std::uint32_t ttl = 300);

/// Agent policy adjustments implied by the mode and key material.
void configure_policy(agent::AgentPolicy &policy, const CountermeasureMode &mode,
                      const KeyMaterial &keys);

/// The agent's path to the service under the given mode.
std::unique_ptr<transport::Transport> make_transport(const CountermeasureMode &mode,
                                                     const service::LookupService &service,
                                                     adversary::Adversary *adversary,
                                                     const KeyMaterial &keys,
                                                     std::uint64_t flow_nonce);

struct OverheadScenario
{
  dialect::Kind dialect{dialect::Kind::GTI};
  CountermeasureMode mode;
  std::size_t scans{10};
  bool malicious_file{false};
  // Seconds between successive scans.
  std::uint64_t spacing{0};
  std::uint64_t seed{1};
  std::filesystem::path work_dir;
};

/// Repeated scans of one file; returns the transport's counters.
transport::OverheadMetrics measure_overhead(const OverheadScenario &scenario);

} // namespace dnsaml::countermeasures
