#include "dnsaml/signing.hpp"

namespace dnsaml::signing
{

using wire::Bytes;
using wire::DnsMessage;
using wire::DnsName;
using wire::ResourceRecord;

const char *to_string(VerifyResult r)
{
  switch (r)
  {
  case VerifyResult::Accepted: return "accepted";
  case VerifyResult::Invalid: return "invalid";
  case VerifyResult::MissingSignature: return "missing";
  }
  return "?";
}

Bytes canonical_bytes(const DnsName &qname, std::uint8_t rtype, std::span<const std::uint8_t> rdata)
{
  std::string name = qname.to_lower_string();
  Bytes out(name.begin(), name.end());
  out.push_back(0x00);
  out.push_back(rtype);
  out.insert(out.end(), rdata.begin(), rdata.end());
  return out;
}

ResourceRecord sign_response(const crypto::SecretKey &key, const DnsName &qname, std::uint8_t rtype,
                             std::span<const std::uint8_t> rdata, std::uint32_t ttl)
{
  auto sig = crypto::sign_detached(key, canonical_bytes(qname, rtype, rdata));
  return ResourceRecord::txt(qname, {crypto::base64_encode(sig)}, ttl);
}

bool verify_record(const crypto::PublicKey &key, const ResourceRecord &sig_record,
                   const DnsName &qname, std::uint8_t rtype, std::span<const std::uint8_t> rdata)
{
  const auto *strings = sig_record.txt_strings();
  if (sig_record.type != wire::RType::TXT || !strings || strings->size() != 1)
    return false;
  auto raw = crypto::base64_decode(strings->front());
  if (!raw || raw->size() != crypto::kSignatureSize)
    return false;
  crypto::Signature sig{};
  std::copy(raw->begin(), raw->end(), sig.begin());
  return crypto::verify_detached(key, sig, canonical_bytes(qname, rtype, rdata));
}

namespace
{

// An empty answer section is signed as record type 0 over the rcode byte.
Bytes rcode_rdata(const DnsMessage &msg) { return {static_cast<std::uint8_t>(msg.rcode)}; }

} // namespace

void sign_message(const crypto::SecretKey &key, DnsMessage &response, std::uint32_t ttl)
{
  const DnsName &qname = response.question.name;
  if (response.answers.empty())
  {
    response.additional.push_back(sign_response(key, qname, 0, rcode_rdata(response), ttl));
    return;
  }
  for (const auto &rr : response.answers)
    response.additional.push_back(
        sign_response(key, qname, static_cast<std::uint8_t>(rr.type), rr.rdata_bytes(), ttl));
}

VerifyResult verify_message(const crypto::PublicKey &key, const DnsMessage &response)
{
  const DnsName &qname = response.question.name;
  std::size_t expected = response.answers.empty() ? 1 : response.answers.size();
  if (response.additional.size() < expected)
    return VerifyResult::MissingSignature;
  if (response.answers.empty())
    return verify_record(key, response.additional.front(), qname, 0, rcode_rdata(response))
               ? VerifyResult::Accepted
               : VerifyResult::Invalid;
  for (std::size_t i = 0; i < response.answers.size(); ++i)
  {
    const auto &rr = response.answers[i];
    if (!verify_record(key, response.additional[i], qname, static_cast<std::uint8_t>(rr.type),
                       rr.rdata_bytes()))
      return VerifyResult::Invalid;
  }
  return VerifyResult::Accepted;
}

} // namespace dnsaml::signing
