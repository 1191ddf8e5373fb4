#include "dnsaml/hunter.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <arpa/inet.h>
#include <fstream>
#include <random>
#include <regex>

using namespace dnsaml::hunter;

namespace
{

LogRecord rec(std::string day, std::string client, std::string qname, std::string country = "US",
              std::optional<std::string> answer = std::nullopt)
{
  LogRecord r;
  r.date = std::move(day);
  r.client = std::move(client);
  r.isp = "isp1";
  r.country = std::move(country);
  r.qname = std::move(qname);
  r.qtype = "A";
  r.rcode = answer ? "NOERROR" : "NXDOMAIN";
  r.answer = std::move(answer);
  return r;
}

std::string day(int i)
{
  return std::string("2026-01-") + (i < 9 ? "0" : "") + std::to_string(i + 1);
}

const std::string kHash(32, 'a');

// Records for one zone: `per_day` queries on each of `days` days, `structured`
// of them carrying a hash label.
void add_zone(std::vector<LogRecord> &out, const std::string &zone, int days, int per_day, int structured,
              int clients = 10)
{
  for (int d = 0; d < days; ++d)
    for (int k = 0; k < per_day; ++k)
      out.push_back(rec(day(d), "c" + std::to_string(k % clients),
                        (k < structured ? kHash : "www" + std::to_string(k)) + "." + zone));
}

Aggregator fold(const std::vector<LogRecord> &records)
{
  Aggregator agg;
  for (const auto &r : records)
    agg.add(r);
  return agg;
}

// Independent reference for the search over corpora whose only multi-label
// public suffix is co.uk.
struct Oracle
{
  std::map<std::string, std::uint64_t> queries, ip, hash;
  std::set<std::string> days;

  static std::string zone_of(std::string q)
  {
    std::transform(q.begin(), q.end(), q.begin(), ::tolower);
    if (!q.empty() && q.back() == '.')
      q.pop_back();
    std::vector<std::string> parts;
    std::stringstream ss(q);
    for (std::string p; std::getline(ss, p, '.');)
      parts.push_back(p);
    std::size_t keep = parts.size() >= 3 && parts[parts.size() - 2] == "co" && parts.back() == "uk" ? 3 : 2;
    keep = std::min(keep, parts.size());
    std::string z;
    for (std::size_t i = parts.size() - keep; i < parts.size(); ++i)
      z += (z.empty() ? "" : ".") + parts[i];
    return z;
  }

  static bool ip_prefix(const std::string &q)
  {
    static const std::regex re(R"(^((25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\.){4}[^.]+\..+)");
    if (!std::regex_match(q, re))
      return false;
    auto quad = q.substr(0, q.find('.', q.find('.', q.find('.', q.find('.') + 1) + 1) + 1));
    in_addr a;
    return inet_pton(AF_INET, quad.c_str(), &a) == 1;
  }

  static bool hash_label(const std::string &q)
  {
    static const std::regex re(R"(^[A-Za-z0-9]{32}\..*)");
    return std::regex_match(q, re);
  }

  void add(const LogRecord &r)
  {
    auto z = zone_of(r.qname);
    ++queries[z];
    ip[z] += ip_prefix(r.qname);
    hash[z] += hash_label(r.qname);
    days.insert(r.date);
  }

  std::vector<std::string> search(double theta, double sf, const std::set<std::string> &cats) const
  {
    std::vector<std::pair<double, std::string>> hits;
    for (const auto &[z, n] : queries)
    {
      double mean = static_cast<double>(n) / static_cast<double>(days.size());
      bool structured = static_cast<double>(ip.at(z)) / n >= sf || static_cast<double>(hash.at(z)) / n >= sf;
      if (mean >= theta && cats.count(z) && structured)
        hits.emplace_back(-mean, z);
    }
    std::sort(hits.begin(), hits.end());
    std::vector<std::string> out;
    for (auto &h : hits)
      out.push_back(h.second);
    return out;
  }
};

std::vector<std::string> names(const std::vector<SuspectedZone> &zs)
{
  std::vector<std::string> out;
  for (const auto &z : zs)
    out.push_back(z.zone);
  return out;
}

} // namespace

TEST(Suffix, RegisteredZone)
{
  auto s = SuffixList::builtin();
  EXPECT_EQ(registered_zone("abc.malwaredb.nessus.org.", s), "nessus.org");
  EXPECT_EQ(registered_zone("X.Malware.Hash.Cymru.COM", s), "cymru.com");
  EXPECT_EQ(registered_zone("a.b.shop.co.uk", s), "shop.co.uk");
  EXPECT_EQ(registered_zone("localhost", s), "localhost");
  EXPECT_EQ(registered_zone("a.b.unknowntld", s), "b.unknowntld");
}

TEST(Suffix, WildcardAndException)
{
  auto s = SuffixList::parse("// test\nck\n*.ck\n!www.ck\n");
  EXPECT_EQ(registered_zone("a.b.c.ck", s), "b.c.ck");
  EXPECT_EQ(registered_zone("x.www.ck", s), "www.ck");
}

TEST(Labels, Structure)
{
  EXPECT_TRUE(has_ipv4_prefix("2.0.0.127.zen.spamhaus.org"));
  EXPECT_FALSE(has_ipv4_prefix("2.0.0.256.zen.spamhaus.org"));
  EXPECT_FALSE(has_ipv4_prefix("02.0.0.1.zen.spamhaus.org"));
  EXPECT_FALSE(has_ipv4_prefix("1.2.3.4"));
  EXPECT_TRUE(has_hash_label(kHash + ".cymru.com"));
  EXPECT_FALSE(has_hash_label(std::string(31, 'a') + ".cymru.com"));
  EXPECT_FALSE(has_hash_label(std::string(31, 'a') + "-.cymru.com"));
  EXPECT_EQ(first_label("ABC.def"), "abc");
}

TEST(Ingest, CsvJsonlAndGzip)
{
  testutil::TempDir tmp;
  std::vector<LogRecord> rs{rec(day(0), "c1", "a.example.com", "US", "1.2.3.4"), rec(day(1), "c2", "b.example.com")};
  rs[1].country.reset();
  write_logs(tmp / "x.csv", rs);
  write_logs(tmp / "x.csv.gz", rs);
  EXPECT_EQ(ingest_logs(tmp / "x.csv"), rs);
  EXPECT_EQ(ingest_logs(tmp / "x.csv.gz"), rs);

  std::ofstream(tmp / "x.jsonl") << R"({"date":"2026-01-01","client":"c1","isp":"i","country":"US","qname":"a.example.com","qtype":"A","rcode":"NOERROR","answer":"1.2.3.4"})"
                                 << "\nnot json\n"
                                 << R"({"date":"2026-13-01","client":"c1","qname":"a.example.com"})" << "\n";
  IngestStats st;
  auto j = ingest_logs(tmp / "x.jsonl", &st);
  EXPECT_EQ(j.size(), 1u);
  EXPECT_EQ(st.malformed, 2u);
}

TEST(Ingest, MalformedCsvRowsAreCounted)
{
  testutil::TempDir tmp;
  std::ofstream(tmp / "m.csv") << "date,client,isp,country,qname,qtype,rcode,answer\n"
                               << "2026-01-01,c,i,US,a.b.com,A,NOERROR,1.1.1.1\n"
                               << "2026-01-01,c,i\n"
                               << "2026-02-30,c,i,US,a.b.com,A,NOERROR,\n"
                               << "2026-01-01,c,i,US,,A,NOERROR,\n";
  IngestStats st;
  EXPECT_EQ(ingest_logs(tmp / "m.csv", &st).size(), 1u);
  EXPECT_EQ(st.malformed, 3u);
}

TEST(Ingest, FormatErrors)
{
  testutil::TempDir tmp;
  std::ofstream(tmp / "bad.csv") << "foo,bar\n1,2\n";
  EXPECT_THROW(ingest_logs(tmp / "bad.csv"), FormatError);
  EXPECT_THROW(ingest_logs(tmp / "missing.csv"), FormatError);
}

TEST(Aggregate, Fractions)
{
  std::vector<LogRecord> rs;
  add_zone(rs, "cymru.com", 1, 100, 100);
  add_zone(rs, "vendor.com", 1, 100, 5);
  auto zones = aggregate(rs);
  EXPECT_DOUBLE_EQ(zones.at("cymru.com").hash_label_fraction(), 1.0);
  EXPECT_DOUBLE_EQ(zones.at("vendor.com").hash_label_fraction(), 0.05);
  EXPECT_DOUBLE_EQ(zones.at("vendor.com").ip_label_fraction(), 0.0);
}

TEST(Search, ThetaBoundaryAndCategoryGate)
{
  std::vector<LogRecord> rs;
  add_zone(rs, "at.com", 2, 1000, 1000);
  add_zone(rs, "below.com", 2, 999, 999);
  add_zone(rs, "uncat.com", 2, 5000, 5000);
  add_zone(rs, "plain.com", 2, 5000, 499);
  auto agg = fold(rs);
  SearchConfig cfg;
  std::set<std::string> cats{"at.com", "below.com", "plain.com"};
  EXPECT_EQ(names(search_dnsaml(agg, cfg, cats)), std::vector<std::string>{"at.com"});
  cfg.structure_fraction = 0.0998;
  EXPECT_EQ(names(search_dnsaml(agg, cfg, cats)), (std::vector<std::string>{"plain.com", "at.com"}));
  EXPECT_THROW(search_dnsaml(agg, SearchConfig{}), MissingCategoryList);
}

TEST(Search, TunnelingHeuristic)
{
  std::unordered_map<std::string, std::uint64_t> one{{"aaaa", 10}};
  EXPECT_DOUBLE_EQ(tun_score(one), 0.0);
  std::unordered_map<std::string, std::uint64_t> many;
  for (int i = 0; i < 10; ++i)
    many["q" + std::to_string(i) + "x7z"] = 1;
  double s = tun_score(many);
  EXPECT_GT(s, 0.5);
  EXPECT_LE(s, 1.0);
}

TEST(Search, ConfigLoadAndValidate)
{
  testutil::TempDir tmp;
  std::ofstream(tmp / "cats.txt") << "# comment\ncymru.com\n";
  std::ofstream(tmp / "cfg.json") << R"({"theta": 5, "category_list": "cats.txt", "tun": {"enabled": true}})";
  auto cfg = SearchConfig::load(tmp / "cfg.json");
  EXPECT_EQ(cfg.theta, 5);
  EXPECT_TRUE(cfg.tun.enabled);
  EXPECT_EQ(load_category_list(*cfg.category_list), std::set<std::string>{"cymru.com"});
  EXPECT_THROW(load_category_list(tmp / "nope.txt"), MissingCategoryList);
  cfg.structure_fraction = 2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Metrics, Prevalence)
{
  std::vector<LogRecord> rs;
  add_zone(rs, "cymru.com", 10, 500, 500, 50);
  auto agg = fold(rs);
  auto p = prevalence(agg, {"cymru.com", "absent.com"});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0].classifications, 500);
  EXPECT_DOUBLE_EQ(p[0].unique_agents, 50);
  EXPECT_DOUBLE_EQ(p[0].countries, 1);
  EXPECT_DOUBLE_EQ(p[1].classifications, 0);
  EXPECT_DOUBLE_EQ(p[1].unique_agents, 0);
}

TEST(Metrics, Deletions)
{
  std::vector<LogRecord> rs;
  for (int k = 0; k < 100; ++k)
    rs.push_back(rec(day(0), "c", (k < 50 ? kHash : std::string(32, 'b')) + ".avts.mcafee.com", "US",
                     k < 3 ? "127.64.8.8" : "127.0.0.1"));
  rs.push_back(rec(day(0), "c", kHash + ".other.com", "US", "127.64.8.8"));
  rs.push_back(rec(day(1), "c", "x.avts.mcafee.com", "US", "127.0.0.1"));
  auto d = deletion_rate(rs, "avts.mcafee.com");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].total, 100u);
  EXPECT_EQ(d[0].unique_signatures, 2u);
  EXPECT_EQ(d[0].deletions, 3u);
  EXPECT_EQ(d[1].deletions, 0u);
}

TEST(Aggregate, MergeIsAssociativeAndOrderFree)
{
  auto corpus = generate_corpus(CorpusSpec::standard(5, 30000, 10, 3));
  auto &rs = corpus.records;
  auto whole = fold(rs);

  std::vector<LogRecord> a(rs.begin(), rs.begin() + 7000), b(rs.begin() + 7000, rs.begin() + 19000),
      c(rs.begin() + 19000, rs.end());
  auto left = fold(a);
  left.merge(fold(b));
  left.merge(fold(c));
  auto bc = fold(b);
  bc.merge(fold(c));
  auto right = fold(a);
  right.merge(bc);
  EXPECT_TRUE(left == whole);
  EXPECT_TRUE(right == whole);

  auto shuffled = rs;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(42));
  EXPECT_TRUE(fold(shuffled) == whole);
}

TEST(Search, AgreesWithBruteForceOracle)
{
  auto corpus = generate_corpus(CorpusSpec::standard(8, 60000, 20, 4));
  Oracle o;
  for (const auto &r : corpus.records)
    o.add(r);
  auto agg = fold(corpus.records);
  std::set<std::string> cats(corpus.truth.categories.begin(), corpus.truth.categories.end());
  SearchConfig cfg;
  for (double theta : {100.0, 1000.0, 1500.0})
    for (double sf : {0.05, 0.10, 0.5})
    {
      cfg.theta = theta;
      cfg.structure_fraction = sf;
      EXPECT_EQ(names(search_dnsaml(agg, cfg, cats)), o.search(theta, sf, cats)) << theta << " " << sf;
    }
}

TEST(Search, FindsExactlyThePlantedZones)
{
  auto corpus = generate_corpus(CorpusSpec::standard(3, 100000));
  std::set<std::string> cats(corpus.truth.categories.begin(), corpus.truth.categories.end());
  std::set<std::string> planted, found;
  for (const auto &z : corpus.truth.zones)
    if (z.planted)
      planted.insert(z.zone);
  for (const auto &s : search_dnsaml(fold(corpus.records), SearchConfig{}, cats))
    found.insert(s.zone);
  EXPECT_EQ(found, planted);
  EXPECT_EQ(planted.size(), 3u);
}

TEST(Search, RaisingThetaNeverAddsZones)
{
  auto corpus = generate_corpus(CorpusSpec::standard(4, 50000, 20, 3));
  std::set<std::string> cats(corpus.truth.categories.begin(), corpus.truth.categories.end());
  auto agg = fold(corpus.records);
  SearchConfig cfg;
  std::set<std::string> prev;
  bool first = true;
  for (double theta : {1.0, 10.0, 500.0, 1000.0, 1200.0, 5000.0, 1e9})
  {
    cfg.theta = theta;
    auto n = names(search_dnsaml(agg, cfg, cats));
    std::set<std::string> cur(n.begin(), n.end());
    if (!first)
      EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end())) << theta;
    prev = cur;
    first = false;
  }
}

TEST(Generator, Deterministic)
{
  auto a = generate_corpus(CorpusSpec::standard(6, 20000, 10, 2));
  auto b = generate_corpus(CorpusSpec::standard(6, 20000, 10, 2));
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.truth.to_json(), b.truth.to_json());
  EXPECT_NE(generate_corpus(CorpusSpec::standard(7, 20000, 10, 2)).records, a.records);
}
