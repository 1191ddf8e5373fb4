#include "dnsaml/wire.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dnsaml::wire;

namespace
{

WireErrc decode_error(const Bytes &b)
{
  try
  {
    decode_message(b);
  }
  catch (const WireError &e)
  {
    return e.code();
  }
  ADD_FAILURE() << "decode did not throw";
  return WireErrc::InvalidRecord;
}

} // namespace

TEST(DnsName, ParsesPresentationForm)
{
  auto n = DnsName::parse("B48eb.l2.Nessus.org.");
  EXPECT_EQ(n.labels().size(), 4u);
  EXPECT_EQ(n.to_string(), "B48eb.l2.Nessus.org.");
  EXPECT_EQ(n.to_lower_string(), "b48eb.l2.nessus.org.");
  EXPECT_EQ(n, DnsName::parse("b48eb.l2.nessus.org"));
  EXPECT_TRUE(DnsName::parse(".").is_root());
}

TEST(DnsName, LabelLimitIs63)
{
  EXPECT_NO_THROW(DnsName::parse(std::string(63, 'a') + ".example"));
  EXPECT_THROW(DnsName::parse(std::string(64, 'a') + ".example"), WireError);
  EXPECT_THROW(DnsName::parse("a..example"), WireError);
}

TEST(DnsName, NameLimitIs255)
{
  // Four 63-byte labels plus dots: 4*63 + 3 = 255 presentation characters.
  std::string l(63, 'x');
  std::string ok = l + "." + l + "." + l + "." + l.substr(0, 61);
  EXPECT_NO_THROW(DnsName::parse(ok));
  EXPECT_THROW(DnsName::parse(l + "." + l + "." + l + "." + l + ".a"), WireError);
}

TEST(DnsName, SubdomainAndRelative)
{
  auto zone = DnsName::parse("malware.hash.cymru.com");
  auto q = DnsName::parse("ABC.Malware.hash.cymru.com");
  EXPECT_TRUE(q.is_subdomain_of(zone));
  EXPECT_FALSE(zone.is_subdomain_of(q));
  EXPECT_EQ(q.relative_to(zone), std::vector<std::string>{"ABC"});
  EXPECT_EQ(zone.prepend("x").to_string(), "x.malware.hash.cymru.com.");
}

TEST(Ipv4, ParseAndFormat)
{
  EXPECT_EQ(parse_ipv4("48.5.132.128"), (Ipv4{48, 5, 132, 128}));
  EXPECT_EQ(ipv4_to_string({127, 64, 8, 8}), "127.64.8.8");
  EXPECT_THROW(parse_ipv4("256.1.1.1"), std::exception);
  EXPECT_THROW(parse_ipv4("1.2.3"), std::exception);
}

TEST(Codec, QueryWireBytes)
{
  auto q = make_query(0x1234, DnsName::parse("a.bc"), RType::A);
  auto b = encode_message(q);
  // Header, then 1 a 2 b c 0, type 1, class 1.
  Bytes expected{0x12, 0x34, 0x01, 0x00, 0, 1, 0, 0, 0, 0, 0, 0, 1, 'a', 2, 'b', 'c', 0, 0, 1, 0, 1};
  EXPECT_EQ(b, expected);
  EXPECT_EQ(decode_message(b), q);
}

TEST(Codec, ResponseRoundTrip)
{
  auto q = make_query(7, DnsName::parse("x.avts.mcafee.com"), RType::A);
  auto r = make_response(q, {ResourceRecord::a(q.question.name, {127, 64, 8, 8}, 300)}, RCode::NoError);
  r.additional.push_back(ResourceRecord::txt(q.question.name, {"sig", ""}, 60));
  auto d = decode_message(encode_message(r));
  EXPECT_EQ(d, r);
  EXPECT_TRUE(d.is_response);
}

TEST(Codec, NxDomainDropsAnswers)
{
  auto q = make_query(1, DnsName::parse("x.example"), RType::A);
  auto r = make_response(q, {ResourceRecord::a(q.question.name, {1, 2, 3, 4}, 1)}, RCode::NxDomain);
  EXPECT_TRUE(r.answers.empty());
  EXPECT_THROW(make_response(r, {}, RCode::NoError), WireError);
}

TEST(Codec, FollowsBackwardCompressionPointer)
{
  Bytes b{0, 1, 0x84, 0, 0, 1, 0, 1, 0, 0, 0, 0,
          1, 'a', 2, 'b', 'c', 0, 0, 1, 0, 1,
          0xc0, 12, 0, 1, 0, 1, 0, 0, 0, 60, 0, 4, 10, 0, 0, 1};
  auto m = decode_message(b);
  ASSERT_EQ(m.answers.size(), 1u);
  EXPECT_EQ(m.answers[0].name, DnsName::parse("a.bc"));
  EXPECT_EQ(*m.answers[0].ipv4(), (Ipv4{10, 0, 0, 1}));
}

TEST(Codec, RejectsForwardAndLoopingPointers)
{
  Bytes fwd{0, 1, 0x01, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0xc0, 14, 0, 1, 0, 1};
  EXPECT_EQ(decode_error(fwd), WireErrc::BadPointer);
  Bytes self{0, 1, 0x01, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0xc0, 12, 0, 1, 0, 1};
  EXPECT_EQ(decode_error(self), WireErrc::BadPointer);
}

TEST(Codec, Truncation)
{
  auto b = encode_message(make_query(1, DnsName::parse("abc.example"), RType::TXT));
  for (std::size_t n = 0; n < b.size(); ++n)
  {
    Bytes cut(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_EQ(decode_error(cut), WireErrc::Truncated) << n;
  }
}

TEST(Codec, EnforcesUdpPayloadCap)
{
  auto q = make_query(1, DnsName::parse("x.example"), RType::TXT);
  std::vector<std::string> big(2, std::string(255, 'z'));
  auto r = make_response(q, {ResourceRecord::txt(q.question.name, big, 1)}, RCode::NoError);
  try
  {
    encode_message(r);
    FAIL();
  }
  catch (const WireError &e)
  {
    EXPECT_EQ(e.code(), WireErrc::PayloadTooLarge);
  }
  std::vector<std::string> fits{std::string(255, 'z'), std::string(200, 'y')};
  auto ok = make_response(q, {ResourceRecord::txt(q.question.name, fits, 1)}, RCode::NoError);
  EXPECT_LE(encode_message(ok).size(), kMaxUdpPayload);
}

TEST(Codec, UnsupportedTypeStrictVersusLenient)
{
  // One AAAA answer after the question.
  Bytes b{0, 1, 0x84, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1, 'a', 0, 0, 1, 0, 1,
          0xc0, 12, 0, 28, 0, 1, 0, 0, 0, 1, 0, 16};
  b.resize(b.size() + 16, 0);
  EXPECT_EQ(decode_error(b), WireErrc::UnsupportedType);
  auto m = decode_message(b, DecodeOptions{false});
  EXPECT_TRUE(m.answers.empty());
}

TEST(Codec, HexRoundTrip)
{
  Bytes b{0, 1, 0xab, 0xff};
  EXPECT_EQ(to_hex(b), "0001abff");
  EXPECT_EQ(from_hex("0001ABff"), b);
}

TEST(Codec, RandomizedRoundTrip)
{
  std::mt19937_64 rng(42);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-";
  auto name = [&] {
    std::vector<std::string> labels(1 + rng() % 4);
    for (auto &l : labels)
      for (std::size_t i = 0, n = 1 + rng() % 20; i < n; ++i)
        l += alphabet[rng() % alphabet.size()];
    return DnsName(labels);
  };
  for (int i = 0; i < 2000; ++i)
  {
    auto q = make_query(static_cast<std::uint16_t>(rng()), name(), rng() % 2 ? RType::A : RType::TXT);
    DnsMessage m = q;
    if (rng() % 2)
    {
      std::vector<ResourceRecord> answers;
      for (std::size_t k = 0, n = rng() % 3; k < n; ++k)
        answers.push_back(ResourceRecord::a(name(), {static_cast<std::uint8_t>(rng()), 0, 0, 1},
                                            static_cast<std::uint32_t>(rng())));
      m = make_response(q, answers, rng() % 4 == 0 ? RCode::NxDomain : RCode::NoError);
    }
    ASSERT_EQ(decode_message(encode_message(m)), m);
  }
}
