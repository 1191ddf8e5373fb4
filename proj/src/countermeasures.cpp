#include "dnsaml/countermeasures.hpp"

#include <fstream>
#include <stdexcept>

namespace dnsaml::countermeasures
{

using Kind = CountermeasureMode::Kind;

std::string CountermeasureMode::name() const
{
  switch (kind)
  {
  case Kind::None: return "none";
  case Kind::AppSigning: return "signing";
  case Kind::SecureChannel:
  {
    std::string n = variant == transport::SecureVariant::DoT ? "dot" : "doh";
    return downgrade ? n + "-downgrade" : n;
  }
  case Kind::RestTransport: return "rest";
  }
  return "?";
}

CountermeasureMode CountermeasureMode::parse(std::string_view text)
{
  if (text == "none") return none();
  if (text == "signing") return app_signing();
  if (text == "dot") return dot();
  if (text == "doh") return doh();
  if (text == "doh-downgrade") return doh_with_downgrade();
  if (text == "dot-downgrade") return {Kind::SecureChannel, transport::SecureVariant::DoT, true};
  if (text == "rest") return rest();
  throw std::invalid_argument("unknown countermeasure '" + std::string(text) + "'");
}

KeyMaterial KeyMaterial::derive(std::uint64_t seed)
{
  KeyMaterial k;
  k.service_signing = crypto::SigningKeyPair::derive(seed, "service signing key");
  std::array<std::uint8_t, 8> material{};
  for (int i = 0; i < 8; ++i)
    material[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  k.channel_secret = crypto::derive_key(material, "channel secret");
  return k;
}

service::ServiceConfig service_config_for(const CountermeasureMode &mode, const KeyMaterial &keys,
                                          std::uint32_t ttl)
{
  service::ServiceConfig cfg;
  cfg.ttl = ttl;
  cfg.signing_key = keys.service_signing;
  cfg.sign_all_responses = mode.kind == Kind::AppSigning;
  return cfg;
}

void configure_policy(agent::AgentPolicy &policy, const CountermeasureMode &mode,
                      const KeyMaterial &keys)
{
  if (policy.dialect.kind == dialect::Kind::GTI)
    policy.gti_pubkey = keys.service_signing.public_key;
  if (mode.kind == Kind::AppSigning)
    policy.response_pubkey = keys.service_signing.public_key;
  else
    policy.response_pubkey.reset();
}

std::unique_ptr<transport::Transport> make_transport(const CountermeasureMode &mode,
                                                     const service::LookupService &service,
                                                     adversary::Adversary *adversary,
                                                     const KeyMaterial &keys,
                                                     std::uint64_t flow_nonce)
{
  switch (mode.kind)
  {
  case Kind::None:
  case Kind::AppSigning: return std::make_unique<transport::PlainDnsTransport>(service, adversary);
  case Kind::SecureChannel:
    return std::make_unique<transport::SecureChannelTransport>(
        service, adversary, keys.channel_secret, flow_nonce,
        transport::SecureChannelOptions{mode.variant, mode.downgrade});
  case Kind::RestTransport:
    return std::make_unique<transport::RestTransport>(service, adversary, keys.channel_secret,
                                                      flow_nonce);
  }
  throw std::invalid_argument("unknown countermeasure");
}

transport::OverheadMetrics measure_overhead(const OverheadScenario &scenario)
{
  auto d = dialect::Dialect::defaults(scenario.dialect);
  auto keys = KeyMaterial::derive(scenario.seed);

  const std::string body = "overhead probe file, seed " + std::to_string(scenario.seed);
  wire::Bytes content(body.begin(), body.end());

  service::Registry reg;
  reg.dialect = d;
  if (scenario.malicious_file)
  {
    service::RegistryEntry e;
    e.classification = service::Classification::Malicious;
    if (d.kind == dialect::Kind::MalwareDB)
      e.nessus_report = dialect::NessusReport{16, 5, 0x8480};
    reg.add(dialect::signature_for(d, content), e);
  }
  service::LookupService svc(std::move(reg), service_config_for(scenario.mode, keys));
  auto transport = make_transport(scenario.mode, svc, nullptr, keys, scenario.seed);

  auto policy = agent::AgentPolicy::defaults(d);
  configure_policy(policy, scenario.mode, keys);
  sim::SimClock clock;
  std::filesystem::remove_all(scenario.work_dir);
  agent::Agent agent(policy, scenario.work_dir, *transport, clock);
  auto path = agent.files_dir() / "probe.bin";

  for (std::size_t i = 0; i < scenario.scans; ++i)
  {
    if (!std::filesystem::exists(path))
    {
      std::ofstream out(path, std::ios::binary);
      out.write(body.data(), static_cast<std::streamsize>(body.size()));
    }
    agent.scan_file(path);
    clock.advance(scenario.spacing);
  }
  return transport->metrics();
}

} // namespace dnsaml::countermeasures
