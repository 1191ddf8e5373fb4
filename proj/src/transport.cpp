#include "dnsaml/transport.hpp"

#include <cstring>

namespace dnsaml::transport
{

using adversary::Direction;
using adversary::UnitKind;
using wire::Bytes;

namespace
{

std::optional<DnsMessage> decode_or_null(const Bytes &bytes)
{
  try
  {
    return wire::decode_message(bytes);
  }
  catch (const std::exception &)
  {
    return std::nullopt;
  }
}

// Runs the service on a query datagram; nullopt when it drops it.
std::optional<Bytes> serve(const service::LookupService &service, const Bytes &query)
{
  return service.handle_datagram(query);
}

constexpr std::uint8_t kToService = 0x01;
constexpr std::uint8_t kToAgent = 0x02;

crypto::AeadKey session_key_for(const crypto::AeadKey &secret, std::uint64_t flow_nonce,
                                std::string_view context)
{
  Bytes material(secret.begin(), secret.end());
  for (int i = 0; i < 8; ++i)
    material.push_back(static_cast<std::uint8_t>(flow_nonce >> (8 * i)));
  return crypto::derive_key(material, context);
}

crypto::AeadNonce make_nonce(std::uint8_t direction, std::uint64_t counter)
{
  crypto::AeadNonce n{};
  n[0] = direction;
  for (int i = 0; i < 8; ++i)
    n[1 + i] = static_cast<std::uint8_t>(counter >> (8 * i));
  return n;
}

} // namespace

PlainDnsTransport::PlainDnsTransport(const service::LookupService &service,
                                     adversary::Adversary *adversary)
    : service_(service), adversary_(adversary)
{
}

std::optional<DnsMessage> PlainDnsTransport::exchange(const DnsMessage &query)
{
  ++metrics_.lookups;
  ++metrics_.round_trips;
  std::optional<DnsMessage> outbound = query;
  if (adversary_)
    outbound = adversary_->interpose(query, Direction::ToService);
  if (!outbound)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  Bytes qbytes = wire::encode_message(*outbound);
  metrics_.bytes_on_wire += qbytes.size();

  auto rbytes = serve(service_, qbytes);
  if (!rbytes)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  metrics_.bytes_on_wire += rbytes->size();
  auto response = decode_or_null(*rbytes);
  if (response && adversary_)
    response = adversary_->interpose(*response, Direction::ToAgent);
  if (!response)
    ++metrics_.timeouts;
  return response;
}

UdpTransport::UdpTransport(std::string address, std::uint16_t port,
                           std::chrono::milliseconds timeout, adversary::Adversary *adversary)
    : address_(std::move(address)), port_(port), timeout_(timeout), adversary_(adversary)
{
}

std::optional<DnsMessage> UdpTransport::exchange(const DnsMessage &query)
{
  ++metrics_.lookups;
  ++metrics_.round_trips;
  std::optional<DnsMessage> outbound = query;
  if (adversary_)
    outbound = adversary_->interpose(query, Direction::ToService);
  if (!outbound)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  Bytes qbytes = wire::encode_message(*outbound);
  metrics_.bytes_on_wire += qbytes.size();
  auto rbytes = service::udp_exchange(address_, port_, qbytes, timeout_);
  if (!rbytes)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  metrics_.bytes_on_wire += rbytes->size();
  auto response = decode_or_null(*rbytes);
  if (response && response->id != query.id)
    response.reset();
  if (response && adversary_)
    response = adversary_->interpose(*response, Direction::ToAgent);
  if (!response)
    ++metrics_.timeouts;
  return response;
}

SecureChannelTransport::SecureChannelTransport(const service::LookupService &service,
                                               adversary::Adversary *adversary,
                                               crypto::AeadKey shared_secret,
                                               std::uint64_t flow_nonce,
                                               SecureChannelOptions options)
    : service_(service), adversary_(adversary), secret_(shared_secret), flow_nonce_(flow_nonce),
      options_(options)
{
}

bool SecureChannelTransport::supports_agent_cache() const
{
  // DoH resolvers cache at the recursive resolver only.
  if (downgraded_)
    return true;
  return options_.variant == SecureVariant::DoT;
}

std::string SecureChannelTransport::name() const
{
  std::string n = options_.variant == SecureVariant::DoT ? "dot:853" : "doh:443";
  return downgraded_ ? n + "(downgraded)" : n;
}

Bytes SecureChannelTransport::pad_frame(const Bytes &message)
{
  if (message.size() > wire::kMaxUdpPayload)
    throw wire::WireError(wire::WireErrc::PayloadTooLarge, "frame payload exceeds 512 bytes");
  Bytes frame(kSecureFrameSize, 0);
  frame[0] = static_cast<std::uint8_t>(message.size() >> 8);
  frame[1] = static_cast<std::uint8_t>(message.size() & 0xff);
  std::copy(message.begin(), message.end(), frame.begin() + 2);
  return frame;
}

std::optional<Bytes> SecureChannelTransport::unpad_frame(const Bytes &frame)
{
  if (frame.size() != kSecureFrameSize)
    return std::nullopt;
  std::size_t len = (static_cast<std::size_t>(frame[0]) << 8) | frame[1];
  if (len > wire::kMaxUdpPayload)
    return std::nullopt;
  return Bytes(frame.begin() + 2, frame.begin() + 2 + static_cast<std::ptrdiff_t>(len));
}

crypto::AeadNonce SecureChannelTransport::nonce(std::uint8_t direction, std::uint64_t counter) const
{
  return make_nonce(direction, counter);
}

bool SecureChannelTransport::handshake()
{
  ++metrics_.handshakes;
  ++metrics_.round_trips;
  // Hello carries the flow nonce; both ends derive the session key from it.
  Bytes hello = {'H', 'E', 'L', 'O'};
  for (int i = 0; i < 8; ++i)
    hello.push_back(static_cast<std::uint8_t>(flow_nonce_ >> (8 * i)));
  metrics_.bytes_on_wire += hello.size();
  std::optional<Bytes> seen = hello;
  if (adversary_)
    seen = adversary_->interpose_frame(hello, Direction::ToService, UnitKind::Handshake);
  if (!seen || *seen != hello)
    return false;

  crypto::AeadKey key = session_key_for(secret_, flow_nonce_, "dnsaml secure channel");
  Bytes ack = crypto::aead_seal(key, make_nonce(0xff, flow_nonce_), hello);
  metrics_.bytes_on_wire += ack.size();
  std::optional<Bytes> back = ack;
  if (adversary_)
    back = adversary_->interpose_frame(ack, Direction::ToAgent, UnitKind::Handshake);
  if (!back || !crypto::aead_open(key, make_nonce(0xff, flow_nonce_), *back))
    return false;
  session_key_ = key;
  return true;
}

std::optional<DnsMessage> SecureChannelTransport::exchange(const DnsMessage &query)
{
  if (!fallback_ && !session_key_ && !handshake_failed_ && !handshake())
  {
    handshake_failed_ = true;
    if (options_.allow_downgrade)
    {
      downgraded_ = true;
      fallback_ = std::make_unique<PlainDnsTransport>(service_, adversary_);
    }
  }
  if (fallback_)
  {
    const OverheadMetrics before = fallback_->metrics();
    auto r = fallback_->exchange(query);
    const OverheadMetrics &after = fallback_->metrics();
    metrics_.lookups += after.lookups - before.lookups;
    metrics_.round_trips += after.round_trips - before.round_trips;
    metrics_.bytes_on_wire += after.bytes_on_wire - before.bytes_on_wire;
    metrics_.timeouts += after.timeouts - before.timeouts;
    return r;
  }
  ++metrics_.lookups;
  if (!session_key_)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  ++metrics_.round_trips;
  const std::uint64_t seq = counter_++;

  Bytes sealed = crypto::aead_seal(*session_key_, nonce(kToService, seq),
                                   pad_frame(wire::encode_message(query)));
  metrics_.bytes_on_wire += sealed.size();
  std::optional<Bytes> delivered = sealed;
  if (adversary_)
    delivered = adversary_->interpose_frame(sealed, Direction::ToService, UnitKind::Frame);
  if (!delivered)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }

  auto opened = crypto::aead_open(*session_key_, nonce(kToService, seq), *delivered);
  if (!opened)
  {
    ++metrics_.auth_failures;
    ++metrics_.timeouts;
    return std::nullopt;
  }
  auto plain_query = unpad_frame(*opened);
  auto rbytes = plain_query ? serve(service_, *plain_query) : std::nullopt;
  if (!rbytes)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }

  Bytes sealed_reply = crypto::aead_seal(*session_key_, nonce(kToAgent, seq), pad_frame(*rbytes));
  metrics_.bytes_on_wire += sealed_reply.size();
  std::optional<Bytes> reply = sealed_reply;
  if (adversary_)
    reply = adversary_->interpose_frame(sealed_reply, Direction::ToAgent, UnitKind::Frame);
  if (!reply)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  auto reply_plain = crypto::aead_open(*session_key_, nonce(kToAgent, seq), *reply);
  if (!reply_plain)
  {
    ++metrics_.auth_failures;
    ++metrics_.timeouts;
    return std::nullopt;
  }
  auto unpadded = unpad_frame(*reply_plain);
  auto response = unpadded ? decode_or_null(*unpadded) : std::nullopt;
  if (!response)
    ++metrics_.timeouts;
  return response;
}

PayloadTooLarge::PayloadTooLarge(std::size_t size)
    : std::runtime_error("PayloadTooLarge: request of " + std::to_string(size) +
                         " bytes exceeds the 2 MB limit"),
      size_(size)
{
}

RestTransport::RestTransport(const service::LookupService &service, adversary::Adversary *adversary,
                             crypto::AeadKey shared_secret, std::uint64_t flow_nonce)
    : service_(service), adversary_(adversary),
      session_key_(session_key_for(shared_secret, flow_nonce, "dnsaml rest session"))
{
}

Bytes RestTransport::encode_request(const RestRequest &request)
{
  Bytes out;
  out.reserve(request.qname.size() + request.payload.size() + 8);
  out.push_back(static_cast<std::uint8_t>(request.qname.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(request.qname.size() & 0xff));
  out.insert(out.end(), request.qname.begin(), request.qname.end());
  auto qtype = static_cast<std::uint16_t>(request.qtype);
  out.push_back(static_cast<std::uint8_t>(qtype >> 8));
  out.push_back(static_cast<std::uint8_t>(qtype & 0xff));
  std::uint32_t plen = static_cast<std::uint32_t>(request.payload.size());
  for (int shift = 24; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>(plen >> shift));
  out.insert(out.end(), request.payload.begin(), request.payload.end());
  return out;
}

std::optional<RestRequest> RestTransport::decode_request(const Bytes &bytes)
{
  if (bytes.size() < 2)
    return std::nullopt;
  std::size_t qlen = (static_cast<std::size_t>(bytes[0]) << 8) | bytes[1];
  if (bytes.size() < 2 + qlen + 6)
    return std::nullopt;
  RestRequest req;
  req.qname.assign(bytes.begin() + 2, bytes.begin() + 2 + static_cast<std::ptrdiff_t>(qlen));
  std::size_t p = 2 + qlen;
  auto raw_type = static_cast<std::uint16_t>((bytes[p] << 8) | bytes[p + 1]);
  if (raw_type != 1 && raw_type != 16)
    return std::nullopt;
  req.qtype = static_cast<wire::RType>(raw_type);
  p += 2;
  std::size_t plen = 0;
  for (int i = 0; i < 4; ++i)
    plen = (plen << 8) | bytes[p + i];
  p += 4;
  if (bytes.size() != p + plen)
    return std::nullopt;
  req.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(p), bytes.end());
  return req;
}

std::optional<RestResponse> RestTransport::lookup(const RestRequest &request)
{
  Bytes body = encode_request(request);
  if (body.size() > kRestPayloadLimit)
    throw PayloadTooLarge(body.size());
  ++metrics_.lookups;
  ++metrics_.round_trips;
  const std::uint64_t seq = counter_++;

  Bytes sealed = crypto::aead_seal(session_key_, make_nonce(kToService, seq), body);
  metrics_.bytes_on_wire += sealed.size();
  std::optional<Bytes> delivered = sealed;
  if (adversary_)
    delivered = adversary_->interpose_frame(sealed, Direction::ToService, UnitKind::Frame);
  auto opened = delivered ? crypto::aead_open(session_key_, make_nonce(kToService, seq), *delivered)
                          : std::nullopt;
  if (!opened)
  {
    if (delivered)
      ++metrics_.auth_failures;
    ++metrics_.timeouts;
    return std::nullopt;
  }

  auto req = decode_request(*opened);
  if (!req)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  std::optional<DnsMessage> answer;
  try
  {
    auto q = wire::make_query(static_cast<std::uint16_t>(seq), wire::DnsName::parse(req->qname), req->qtype);
    answer = service_.handle_query(q);
  }
  catch (const std::exception &)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  Bytes reply = crypto::aead_seal(session_key_, make_nonce(kToAgent, seq), wire::encode_message(*answer));
  metrics_.bytes_on_wire += reply.size();
  std::optional<Bytes> back = reply;
  if (adversary_)
    back = adversary_->interpose_frame(reply, Direction::ToAgent, UnitKind::Frame);
  auto reply_plain = back ? crypto::aead_open(session_key_, make_nonce(kToAgent, seq), *back)
                          : std::nullopt;
  if (!reply_plain)
  {
    if (back)
      ++metrics_.auth_failures;
    ++metrics_.timeouts;
    return std::nullopt;
  }
  auto decoded = decode_or_null(*reply_plain);
  if (!decoded)
  {
    ++metrics_.timeouts;
    return std::nullopt;
  }
  return RestResponse{*decoded, req->payload.size()};
}

std::optional<DnsMessage> RestTransport::exchange(const DnsMessage &query)
{
  auto r = lookup(RestRequest{query.question.name.to_string(), query.question.type, {}});
  if (!r)
    return std::nullopt;
  r->answer.id = query.id;
  return r->answer;
}

} // namespace dnsaml::transport
