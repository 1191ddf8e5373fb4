#include "dnsaml/dialects.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <random>

using namespace dnsaml;
using namespace dnsaml::dialect;

namespace
{

DnsMessage answer_a(const Dialect &d, const Ipv4 &addr)
{
  auto sig = Signature(std::string(32, 'a'), d.hash_scheme);
  auto q = build_lookup_query(d, sig, wire::RType::A, 9);
  return wire::make_response(q, {wire::ResourceRecord::a(q.question.name, addr, 60)}, wire::RCode::NoError);
}

DnsMessage nxdomain(const Dialect &d)
{
  auto q = build_lookup_query(d, Signature(std::string(32, 'a'), d.hash_scheme), wire::RType::A, 9);
  return wire::make_response(q, {}, wire::RCode::NxDomain);
}

} // namespace

TEST(Nessus, DecodesSpoofedAddressByHand)
{
  // 48 = 0b001_10000 -> 16 engines; 5 -> 5 flagged; 132,128 -> 0x8480.
  auto r = decode_nessus_report({48, 5, 132, 128});
  EXPECT_EQ(r.engines_total, 48 & 0x1f);
  EXPECT_EQ(r.engines_total, 16);
  EXPECT_EQ(r.engines_flagged, 5);
  EXPECT_EQ(r.engine_flags, (132 << 8) | 128);
  EXPECT_EQ(r.engine_flags, 0x8480);
  EXPECT_TRUE(r.engine_flagged(0));
  EXPECT_TRUE(r.engine_flagged(5));
  EXPECT_TRUE(r.engine_flagged(8));
  EXPECT_FALSE(r.engine_flagged(1));
  EXPECT_TRUE(r.coherent());
}

TEST(Nessus, BenignAddresses)
{
  EXPECT_EQ(decode_nessus_report(kNessusBenignA).engines_total, 8);
  EXPECT_EQ(decode_nessus_report(kNessusBenignB).engines_total, 16);
  EXPECT_EQ(decode_nessus_report(kNessusBenignA).engines_flagged, 0);
  EXPECT_EQ(decode_nessus_report(kNessusBenignB).engines_flagged, 0);
}

TEST(Nessus, EncodeRejectsIncoherent)
{
  EXPECT_THROW(encode_nessus_report({4, 5, 0}, 0), DialectError);
  EXPECT_THROW(encode_nessus_report({16, 1, 0x0003}, 0), DialectError);
  EXPECT_EQ(encode_nessus_report({16, 5, 0x8480}, 0b001), (Ipv4{48, 5, 132, 128}));
}

TEST(Nessus, SampledRoundTrip)
{
  std::mt19937 rng(3);
  for (int i = 0; i < 100000; ++i)
  {
    NessusReport r;
    r.engines_total = static_cast<std::uint8_t>(rng() % 32);
    r.engines_flagged = static_cast<std::uint8_t>(rng() % (r.engines_total + 1));
    do
      r.engine_flags = static_cast<std::uint16_t>(rng());
    while (std::popcount(r.engine_flags) > r.engines_flagged);
    auto prefix = static_cast<std::uint8_t>(rng() % 8);
    auto addr = encode_nessus_report(r, prefix);
    ASSERT_EQ(decode_nessus_report(addr), r);
    ASSERT_EQ(addr[0] >> 5, prefix);
  }
}

TEST(Signatures, SchemesAndLengths)
{
  std::string content = "sample";
  wire::Bytes b(content.begin(), content.end());
  auto mhr = Dialect::defaults(Kind::MHR);
  EXPECT_EQ(signature_for(mhr, b).hex(), crypto::md5_hex(b));
  mhr.hash_scheme = HashScheme::SHA1;
  EXPECT_EQ(signature_for(mhr, b).hex().size(), 40u);
  auto gti = signature_for(Dialect::defaults(Kind::GTI), b);
  auto nessus = signature_for(Dialect::defaults(Kind::MalwareDB), b);
  EXPECT_EQ(gti.hex().size(), 32u);
  EXPECT_NE(gti.hex(), nessus.hex());
  EXPECT_NE(signature_for(Dialect::defaults(Kind::GTI), b, "host-a").hex(), gti.hex());
  EXPECT_THROW(Signature("ABC", HashScheme::MD5), DialectError);
  EXPECT_THROW(Signature(std::string(32, 'G'), HashScheme::MD5), DialectError);
}

TEST(Dialects, SchemeMismatchIsRejected)
{
  auto d = Dialect::defaults(Kind::GTI);
  d.hash_scheme = HashScheme::SHA1;
  EXPECT_THROW(d.validate(), DialectError);
  auto mhr = Dialect::defaults(Kind::MHR);
  EXPECT_THROW(build_lookup_query(mhr, Signature(std::string(32, 'a'), HashScheme::Custom32Hex), wire::RType::A),
               DialectError);
}

TEST(Dialects, QueryShape)
{
  auto mhr = Dialect::defaults(Kind::MHR);
  auto sig = Signature(std::string(32, 'b'), HashScheme::MD5);
  auto q = build_lookup_query(mhr, sig, wire::RType::TXT, 5);
  EXPECT_EQ(q.question.name.to_string(), std::string(32, 'b') + ".malware.hash.cymru.com.");
  EXPECT_EQ(q.id, 5);
  auto gti = Dialect::defaults(Kind::GTI);
  EXPECT_THROW(build_lookup_query(gti, Signature(std::string(32, 'b'), HashScheme::Custom32Hex), wire::RType::TXT),
               DialectError);
}

TEST(Dialects, MhrVerdicts)
{
  auto d = Dialect::defaults(Kind::MHR);
  EXPECT_EQ(parse_lookup_response(d, answer_a(d, kMhrMalicious)).verdict, VerdictClass::Malicious);
  EXPECT_EQ(parse_lookup_response(d, nxdomain(d)).verdict, VerdictClass::Benign);
  EXPECT_EQ(parse_lookup_response(d, answer_a(d, {127, 0, 0, 9})).verdict, VerdictClass::Unknown);
}

TEST(Dialects, MalwareDbVerdicts)
{
  auto d = Dialect::defaults(Kind::MalwareDB);
  auto v = parse_lookup_response(d, answer_a(d, {48, 5, 132, 128}));
  EXPECT_EQ(v.verdict, VerdictClass::Malicious);
  ASSERT_TRUE(v.report);
  EXPECT_EQ(v.report->engines_flagged, 5);
  EXPECT_EQ(parse_lookup_response(d, answer_a(d, kNessusBenignA)).verdict, VerdictClass::Benign);
  EXPECT_EQ(parse_lookup_response(d, answer_a(d, kNessusBenignB)).verdict, VerdictClass::Benign);
}

TEST(Dialects, GtiVerdicts)
{
  auto d = Dialect::defaults(Kind::GTI);
  auto del = parse_lookup_response(d, answer_a(d, kGtiDeletion));
  EXPECT_EQ(del.verdict, VerdictClass::Malicious);
  EXPECT_TRUE(del.confirmation_required);
  EXPECT_EQ(parse_lookup_response(d, answer_a(d, kGtiBenign)).verdict, VerdictClass::Benign);
}

TEST(Dialects, MalformedResponse)
{
  auto d = Dialect::defaults(Kind::MalwareDB);
  auto q = build_lookup_query(d, Signature(std::string(32, 'a'), d.hash_scheme), wire::RType::A);
  auto empty = wire::make_response(q, {}, wire::RCode::NoError);
  EXPECT_THROW(parse_lookup_response(d, empty), DialectError);
}

TEST(Dialects, GtiConfirmationAndReportUrl)
{
  auto sig = Signature(std::string(32, 'c'), HashScheme::Custom32Hex);
  auto q = gti_confirmation_query(sig, Dialect::defaults(Kind::GTI).zone, 4);
  EXPECT_EQ(q.question.type, wire::RType::TXT);
  EXPECT_TRUE(q.question.name.is_subdomain_of(wire::DnsName::parse("avts.mcafee.com")));
  EXPECT_EQ(report_url(sig), "http://malwaredb.nessus.org/malware/" + std::string(32, 'c'));
}

TEST(Dialects, AlternateZoneIsOwned)
{
  auto d = Dialect::defaults(Kind::GTI);
  auto *z = d.owning_zone(wire::DnsName::parse("x.avqs.mcafee.com"));
  ASSERT_NE(z, nullptr);
  EXPECT_EQ(*z, wire::DnsName::parse("avqs.mcafee.com"));
  EXPECT_EQ(d.owning_zone(wire::DnsName::parse("x.example.com")), nullptr);
}
