#pragma once

#include "dnsaml/crypto.hpp"
#include "dnsaml/wire.hpp"

#include <optional>

namespace dnsaml::signing
{

/// Bytes covered by a response signature: lowercase QNAME presentation,
/// a zero byte, the record type, then the wire RDATA.
wire::Bytes canonical_bytes(const wire::DnsName &qname, std::uint8_t rtype,
                            std::span<const std::uint8_t> rdata);

/// Signature over canonical_bytes, Base64-encoded into a TXT record owned by qname.
wire::ResourceRecord sign_response(const crypto::SecretKey &key, const wire::DnsName &qname,
                                   std::uint8_t rtype, std::span<const std::uint8_t> rdata,
                                   std::uint32_t ttl);

/// Checks a Base64 signature TXT against the canonical bytes.
bool verify_record(const crypto::PublicKey &key, const wire::ResourceRecord &sig_record,
                   const wire::DnsName &qname, std::uint8_t rtype,
                   std::span<const std::uint8_t> rdata);

enum class VerifyResult
{
  Accepted,
  Invalid,
  MissingSignature,
};

const char *to_string(VerifyResult r);

/// Appends signatures to the additional section of a response: one per answer,
/// or a single one binding the rcode when there are no answers.
void sign_message(const crypto::SecretKey &key, wire::DnsMessage &response, std::uint32_t ttl);

/// Inverse of sign_message.
VerifyResult verify_message(const crypto::PublicKey &key, const wire::DnsMessage &response);

} // namespace dnsaml::signing
