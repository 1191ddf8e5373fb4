#include "dnsaml/adversary.hpp"
#include "dnsaml/harness.hpp"

#include "test_util.hpp"

#include <cmath>
#include <fstream>

using namespace dnsaml;
using namespace dnsaml::adversary;

namespace
{

wire::DnsMessage response(const std::string &qname)
{
  auto q = wire::make_query(1, wire::DnsName::parse(qname), wire::RType::A);
  return wire::make_response(q, {wire::ResourceRecord::a(q.question.name, {40, 0, 0, 0}, 60)},
                             wire::RCode::NoError);
}

SpoofRule nessus_rule()
{
  return SpoofRule{RuleMatch{RuleMatch::Kind::Suffix, wire::DnsName::parse("l2.nessus.org"), wire::RType::A},
                   Forgery{Forgery::Kind::A, {48, 5, 132, 128}, {}}};
}

} // namespace

TEST(Adversary, MitmForgesMatchingResponse)
{
  AdversaryConfig cfg;
  cfg.archetype = Archetype::MITM;
  cfg.rules = {nessus_rule()};
  Adversary adv(cfg);
  auto out = adv.interpose(response("abc.l2.nessus.org"), Direction::ToAgent);
  ASSERT_TRUE(out);
  EXPECT_EQ(*out->answers.at(0).ipv4(), (wire::Ipv4{48, 5, 132, 128}));
  auto other = response("abc.example.org");
  EXPECT_EQ(adv.interpose(other, Direction::ToAgent), other);
  // Queries on their way out are never rewritten.
  auto q = wire::make_query(2, wire::DnsName::parse("abc.l2.nessus.org"), wire::RType::A);
  EXPECT_EQ(adv.interpose(q, Direction::ToService), q);
}

TEST(Adversary, FirstMatchWins)
{
  AdversaryConfig cfg;
  cfg.archetype = Archetype::MITM;
  cfg.rules = {SpoofRule{RuleMatch{}, Forgery{Forgery::Kind::NxDomain, {}, {}}}, nessus_rule()};
  Adversary adv(cfg);
  EXPECT_EQ(adv.interpose(response("abc.l2.nessus.org"), Direction::ToAgent)->rcode, wire::RCode::NxDomain);
}

TEST(Adversary, NoneAndZeroProbabilityAreIdentity)
{
  for (auto arch : {Archetype::None, Archetype::OPSAM, Archetype::OP})
  {
    AdversaryConfig cfg;
    cfg.archetype = arch;
    cfg.success_prob = 0.0;
    cfg.rules = {nessus_rule()};
    Adversary adv(cfg);
    for (int i = 0; i < 100; ++i)
    {
      auto r = response("x" + std::to_string(i) + ".l2.nessus.org");
      EXPECT_EQ(adv.interpose(r, Direction::ToAgent), r);
    }
  }
}

TEST(Adversary, EavesdropOnlyNeverAltersBytes)
{
  AdversaryConfig cfg;
  cfg.archetype = Archetype::MITM;
  cfg.eavesdrop_only = true;
  cfg.rules = {nessus_rule()};
  Adversary adv(cfg);
  EXPECT_EQ(cfg.capability(), Capability::CE);
  auto r = response("abc.l2.nessus.org");
  auto out = adv.interpose(r, Direction::ToAgent);
  EXPECT_EQ(wire::encode_message(*out), wire::encode_message(r));
  EXPECT_EQ(adv.log().size(), 1u);
  auto frame = wire::Bytes{1, 2, 3};
  EXPECT_EQ(adv.interpose_frame(frame, Direction::ToAgent, UnitKind::Frame), frame);
}

TEST(Adversary, OffPathCannotEavesdrop)
{
  AdversaryConfig cfg;
  cfg.archetype = Archetype::OPSAM;
  Adversary adv(cfg);
  adv.interpose(response("abc.l2.nessus.org"), Direction::ToAgent);
  EXPECT_EQ(adv.log().size(), 0u);
  EXPECT_FALSE(adv.can_eavesdrop());
  EXPECT_TRUE(adv.can_tamper());
}

TEST(Adversary, BernoulliWithinThreeSigma)
{
  for (double p : {0.1, 0.5, 0.73})
  {
    AdversaryConfig cfg;
    cfg.archetype = Archetype::OP;
    cfg.success_prob = p;
    cfg.rng_seed = 1234;
    cfg.rules = {nessus_rule()};
    Adversary adv(cfg);
    const int n = 10000;
    for (int i = 0; i < n; ++i)
      adv.interpose(response("abc.l2.nessus.org"), Direction::ToAgent);
    EXPECT_EQ(adv.stats().attempts, static_cast<std::uint64_t>(n));
    const double sigma = std::sqrt(n * p * (1 - p));
    EXPECT_LE(std::abs(static_cast<double>(adv.stats().successes) - n * p), 3 * sigma) << p;
  }
}

TEST(Adversary, UnitProbabilityMatchesMitm)
{
  AdversaryConfig lt;
  lt.archetype = Archetype::OPSAM;
  lt.success_prob = 1.0;
  lt.rules = {nessus_rule()};
  AdversaryConfig mitm = lt;
  mitm.archetype = Archetype::MITM;
  Adversary a(lt), b(mitm);
  for (int i = 0; i < 50; ++i)
  {
    auto r = response("h" + std::to_string(i) + ".l2.nessus.org");
    EXPECT_EQ(a.interpose(r, Direction::ToAgent), b.interpose(r, Direction::ToAgent));
  }
}

TEST(Adversary, SameSeedSameTranscript)
{
  auto run = [] {
    AdversaryConfig cfg;
    cfg.archetype = Archetype::OP;
    cfg.success_prob = 0.4;
    cfg.rng_seed = 77;
    cfg.rules = {nessus_rule()};
    Adversary adv(cfg);
    std::string transcript;
    for (int i = 0; i < 200; ++i)
      transcript += wire::to_hex(wire::encode_message(*adv.interpose(response("q.l2.nessus.org"), Direction::ToAgent)));
    return transcript;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adversary, RejectsBadProbability)
{
  AdversaryConfig cfg;
  cfg.archetype = Archetype::OP;
  cfg.success_prob = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Adversary, CaptureLogJsonl)
{
  AdversaryConfig cfg;
  cfg.archetype = Archetype::MITM;
  Adversary adv(cfg);
  auto r = response("abc.l2.nessus.org");
  adv.interpose(r, Direction::ToAgent);
  auto line = adv.log().to_jsonl();
  EXPECT_NE(line.find(wire::to_hex(wire::encode_message(r))), std::string::npos);
}

TEST(Dictionary, EntriesFollowDistinctContent)
{
  testutil::TempDir tmp;
  auto policy = agent::AgentPolicy::defaults(dialect::Dialect::defaults(dialect::Kind::MHR));
  std::vector<harness::FileSpec> files;
  for (int i = 0; i < 5; ++i)
    files.push_back({"f" + std::to_string(i), wire::Bytes(10, static_cast<std::uint8_t>(i))});
  EXPECT_EQ(harness::build_dictionary(policy, files, tmp / "a").size(), 5u);
  files.push_back({"dup", files[0].content});
  EXPECT_EQ(harness::build_dictionary(policy, files, tmp / "b").size(), 5u);
}

TEST(Dictionary, MatchesVictimTrafficOncePerQuery)
{
  testutil::TempDir tmp;
  auto fx = harness::make_fixture(dialect::Kind::MHR, 5);
  auto dict = harness::build_dictionary(agent::AgentPolicy::defaults(fx.dialect), fx.malicious, tmp / "attacker");

  // Victim scans the same file twice with the cache expired in between.
  auto victim_svc = service::LookupService(fx.registry, {});
  AdversaryConfig cfg;
  cfg.archetype = Archetype::MITM;
  cfg.eavesdrop_only = true;
  Adversary tap(cfg);
  transport::PlainDnsTransport t(victim_svc, &tap);
  sim::SimClock clock;
  auto policy = agent::AgentPolicy::defaults(fx.dialect);
  agent::Agent victim(policy, tmp / "victim", t, clock);
  auto path = victim.files_dir() / "x";
  for (int i = 0; i < 2; ++i)
  {
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<const char *>(fx.malicious[0].content.data()),
               static_cast<std::streamsize>(fx.malicious[0].content.size()));
    victim.scan_file(path);
    clock.advance(3600);
  }
  auto hits = match_traffic(dict, tap.log());
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].file_id, fx.malicious[0].id);
  EXPECT_LT(hits[0].tick, hits[1].tick);

  Dictionary unrelated{{"0123456789abcdef0123456789abcdef", "decoy"}};
  EXPECT_TRUE(match_traffic(unrelated, tap.log()).empty());
}
