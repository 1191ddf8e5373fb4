#include "dnsaml/scenario.hpp"

#include "test_util.hpp"

#include <fstream>

using namespace dnsaml;
using namespace dnsaml::scenario;

TEST(Forgery, ParsesTextForms)
{
  auto a = parse_forgery("A 48.5.132.128");
  EXPECT_EQ(a.kind, adversary::Forgery::Kind::A);
  EXPECT_EQ(a.address, (wire::Ipv4{48, 5, 132, 128}));
  EXPECT_EQ(parse_forgery("NXDOMAIN").kind, adversary::Forgery::Kind::NxDomain);
  EXPECT_EQ(parse_forgery("DROP").kind, adversary::Forgery::Kind::Drop);
  auto t = parse_forgery("TXT hello world");
  EXPECT_EQ(t.kind, adversary::Forgery::Kind::Txt);
  ASSERT_EQ(t.txt.size(), 1u);
  EXPECT_EQ(t.txt[0], "hello world");
  EXPECT_THROW(parse_forgery("A 300.1.1.1"), ScenarioError);
  EXPECT_THROW(parse_forgery("SOA x"), ScenarioError);
}

TEST(Scenario, ParsesFullDocument)
{
  auto s = Scenario::parse(R"({
    "dialect": "malwaredb",
    "seed": 7,
    "countermeasure": "doh",
    "scope": "SP",
    "salt_per_endpoint": true,
    "candidate_responses": ["A 40.0.0.0", "NXDOMAIN"],
    "agent": {"on_malicious": "quarantine", "error_silent": false},
    "adversary": {"archetype": "op", "success_prob": 0.25, "rng_seed": 3,
                  "rules": [{"match": "suffix", "name": "nessus.org", "qtype": "A", "response": "A 40.0.0.0"}]}
  })", "/base");
  EXPECT_EQ(s.dialect.kind, dialect::Kind::MalwareDB);
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.countermeasure.name(), "doh");
  EXPECT_EQ(s.scope, harness::Scope::Specific);
  EXPECT_TRUE(s.salt_per_endpoint);
  ASSERT_TRUE(s.candidate_responses);
  EXPECT_EQ(s.candidate_responses->size(), 2u);
  EXPECT_EQ(s.policy.on_malicious, agent::AgentAction::Quarantine);
  EXPECT_FALSE(s.policy.error_silent);
  EXPECT_EQ(s.adversary.archetype, adversary::Archetype::OP);
  EXPECT_DOUBLE_EQ(s.adversary.success_prob, 0.25);
  ASSERT_EQ(s.adversary.rules.size(), 1u);
  EXPECT_EQ(s.adversary.rules[0].match.kind, adversary::RuleMatch::Kind::Suffix);
  EXPECT_EQ(s.sandbox, fs::path("/base/sandbox"));
}

TEST(Scenario, RejectsBadInput)
{
  EXPECT_THROW(Scenario::parse("{"), ScenarioError);
  EXPECT_THROW(Scenario::parse(R"({"dialect": "nope"})"), ScenarioError);
  // Limited tampering needs a seed to stay reproducible.
  EXPECT_THROW(Scenario::parse(R"({"dialect": "mhr", "adversary": {"archetype": "opsam"}})"), ScenarioError);
  EXPECT_THROW(Scenario::parse(R"({"dialect": "mhr", "seed": 1, "adversary": {"archetype": "op", "success_prob": 2}})"),
               ScenarioError);
}

TEST(Scenario, MitmAlwaysSucceeds)
{
  auto s = Scenario::parse(R"({"dialect": "mhr", "adversary": {"archetype": "mitm", "success_prob": 0.1}})");
  EXPECT_DOUBLE_EQ(s.adversary.success_prob, 1.0);
}

TEST(Scenario, FileSetsFromDisk)
{
  testutil::TempDir tmp;
  fs::create_directories(tmp / "benign");
  fs::create_directories(tmp / "malicious");
  std::ofstream(tmp / "benign" / "b.txt") << "plain text";
  std::ofstream(tmp / "malicious" / "z.exe") << "MZ payload two";
  std::ofstream(tmp / "malicious" / "a.exe") << "MZ payload one";
  std::ofstream(tmp / "scenario.json") << R"({"dialect": "mhr", "benign_dir": "benign", "malicious_dir": "malicious"})";

  auto s = Scenario::load(tmp / "scenario.json");
  auto fx = s.fixture();
  ASSERT_EQ(fx.malicious.size(), 2u);
  EXPECT_EQ(fx.malicious[0].id, "a.exe");
  EXPECT_EQ(fx.benign.size(), 1u);
  for (const auto &f : fx.malicious)
    EXPECT_TRUE(fx.registry.is_malicious(dialect::signature_for(fx.dialect, f.content).hex()));

  auto setup = s.to_setup(tmp / "work");
  EXPECT_NO_THROW(setup.validate());
  EXPECT_TRUE(harness::validate_att_s(setup).feasible);
}

TEST(Scenario, DefaultsPerDialect)
{
  auto s = Scenario::for_dialect(dialect::Kind::GTI);
  EXPECT_EQ(s.adversary.archetype, adversary::Archetype::MITM);
  EXPECT_EQ(s.policy.on_malicious, agent::AgentAction::Delete);
  EXPECT_THROW(Scenario::load("/nonexistent/scenario.json"), ScenarioError);
}
