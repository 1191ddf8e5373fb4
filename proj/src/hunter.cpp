#include "dnsaml/hunter.hpp"

#include "dnsaml/sim.hpp"

#include "json.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dnsaml::hunter
{

namespace
{

std::string lower(std::string_view s)
{
  std::string out(s);
  for (auto &c : out)
    if (c >= 'A' && c <= 'Z')
      c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::string_view strip_dot(std::string_view s)
{
  if (!s.empty() && s.back() == '.')
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_labels(std::string_view name)
{
  std::vector<std::string_view> out;
  name = strip_dot(name);
  if (name.empty())
    return out;
  std::size_t start = 0;
  for (;;)
  {
    auto dot = name.find('.', start);
    out.push_back(name.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos)
      break;
    start = dot + 1;
  }
  return out;
}

std::string join(const std::vector<std::string_view> &labels, std::size_t from)
{
  std::string out;
  for (std::size_t i = from; i < labels.size(); ++i)
  {
    if (i != from)
      out += '.';
    out += labels[i];
  }
  return out;
}

// Reads lines from plain or gzip files; gzread passes plain files through.
class LineReader
{
public:
  explicit LineReader(const fs::path &path) : gz_(gzopen(path.c_str(), "rb"))
  {
    if (!gz_)
      throw FormatError("cannot open " + path.string());
    gzbuffer(gz_, 1 << 16);
  }
  ~LineReader()
  {
    if (gz_)
      gzclose(gz_);
  }
  LineReader(const LineReader &) = delete;
  LineReader &operator=(const LineReader &) = delete;

  bool next(std::string &line)
  {
    line.clear();
    std::array<char, 4096> buf;
    while (gzgets(gz_, buf.data(), static_cast<int>(buf.size())))
    {
      line += buf.data();
      if (!line.empty() && line.back() == '\n')
      {
        line.pop_back();
        if (!line.empty() && line.back() == '\r')
          line.pop_back();
        return true;
      }
    }
    return !line.empty();
  }

private:
  gzFile gz_;
};

// RFC 4180 style: quoted fields may contain commas and doubled quotes.
bool split_csv(std::string_view line, std::vector<std::string> &fields)
{
  fields.clear();
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i)
  {
    char c = line[i];
    if (quoted)
    {
      if (c == '"')
      {
        if (i + 1 < line.size() && line[i + 1] == '"')
        {
          cur += '"';
          ++i;
        }
        else
          quoted = false;
      }
      else
        cur += c;
    }
    else if (c == '"' && cur.empty())
      quoted = true;
    else if (c == ',')
    {
      fields.push_back(std::move(cur));
      cur.clear();
    }
    else
      cur += c;
  }
  if (quoted)
    return false;
  fields.push_back(std::move(cur));
  return true;
}

std::string csv_field(std::string_view s)
{
  if (s.find_first_of(",\"\n") == std::string_view::npos)
    return std::string(s);
  std::string out = "\"";
  for (char c : s)
  {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

enum Column
{
  kDate,
  kClient,
  kIsp,
  kCountry,
  kQname,
  kQtype,
  kRcode,
  kAnswer,
  kColumns
};

constexpr std::array<const char *, kColumns> kColumnNames{"date",  "client", "isp",   "country",
                                                          "qname", "qtype",  "rcode", "answer"};

std::optional<std::string> opt(std::string s)
{
  if (s.empty())
    return std::nullopt;
  return s;
}

bool finish_record(LogRecord &r)
{
  r.qname = std::string(trim(r.qname));
  return !r.qname.empty() && valid_date(r.date);
}

} // namespace

bool valid_date(std::string_view text)
{
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (text[i] < '0' || text[i] > '9')
      return false;
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i)
      v = v * 10 + (text[i] - '0');
    return v;
  };
  std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                  std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                  std::chrono::day{static_cast<unsigned>(num(8, 2))}};
  return ymd.ok();
}

IngestStats for_each_record(const fs::path &path, const std::function<void(LogRecord &&)> &fn)
{
  if (!fs::exists(path))
    throw FormatError("no such file " + path.string());
  LineReader in(path);
  IngestStats stats;
  std::string line;

  // First non-blank line decides the format.
  while (in.next(line) && trim(line).empty())
  {
  }
  if (trim(line).empty())
    return stats;

  if (trim(line).front() == '{')
  {
    do
    {
      if (trim(line).empty())
        continue;
      try
      {
        auto j = nlohmann::json::parse(line);
        auto str = [&](const char *key) -> std::string {
          auto it = j.find(key);
          if (it == j.end() || it->is_null())
            return {};
          return it->get<std::string>();
        };
        LogRecord r;
        r.date = str("date");
        r.client = str("client");
        r.isp = str("isp");
        r.country = opt(str("country"));
        r.qname = str("qname");
        r.qtype = str("qtype");
        r.rcode = str("rcode");
        r.answer = opt(str("answer"));
        if (!finish_record(r))
        {
          ++stats.malformed;
          continue;
        }
        ++stats.records;
        fn(std::move(r));
      }
      catch (const nlohmann::json::exception &)
      {
        ++stats.malformed;
      }
    } while (in.next(line));
    return stats;
  }

  std::vector<std::string> fields;
  if (!split_csv(line, fields))
    throw FormatError("unreadable CSV header in " + path.string());
  std::array<int, kColumns> index;
  index.fill(-1);
  for (std::size_t i = 0; i < fields.size(); ++i)
  {
    auto name = lower(trim(fields[i]));
    for (int c = 0; c < kColumns; ++c)
      if (name == kColumnNames[c])
        index[c] = static_cast<int>(i);
  }
  if (index[kDate] < 0 || index[kClient] < 0 || index[kQname] < 0)
    throw FormatError("CSV header of " + path.string() + " lacks date, client or qname");
  const std::size_t width = fields.size();

  while (in.next(line))
  {
    if (trim(line).empty())
      continue;
    if (!split_csv(line, fields) || fields.size() != width)
    {
      ++stats.malformed;
      continue;
    }
    auto take = [&](Column c) -> std::string { return index[c] < 0 ? std::string() : std::move(fields[index[c]]); };
    LogRecord r;
    r.date = take(kDate);
    r.client = take(kClient);
    r.isp = take(kIsp);
    r.country = opt(take(kCountry));
    r.qname = take(kQname);
    r.qtype = take(kQtype);
    r.rcode = take(kRcode);
    r.answer = opt(take(kAnswer));
    if (!finish_record(r))
    {
      ++stats.malformed;
      continue;
    }
    ++stats.records;
    fn(std::move(r));
  }
  return stats;
}

std::vector<LogRecord> ingest_logs(const fs::path &path, IngestStats *stats)
{
  std::vector<LogRecord> out;
  auto s = for_each_record(path, [&](LogRecord &&r) { out.push_back(std::move(r)); });
  if (stats)
    *stats = s;
  return out;
}

void write_logs(const fs::path &path, const std::vector<LogRecord> &records)
{
  std::string buf;
  buf.reserve(1 << 20);
  buf += "date,client,isp,country,qname,qtype,rcode,answer\n";

  const bool gz = path.extension() == ".gz";
  gzFile gzf = nullptr;
  std::ofstream plain;
  if (gz)
  {
    gzf = gzopen(path.c_str(), "wb6");
    if (!gzf)
      throw std::runtime_error("cannot write " + path.string());
  }
  else
  {
    plain.open(path, std::ios::binary | std::ios::trunc);
    if (!plain)
      throw std::runtime_error("cannot write " + path.string());
  }
  auto flush = [&] {
    if (gz)
      gzwrite(gzf, buf.data(), static_cast<unsigned>(buf.size()));
    else
      plain.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    buf.clear();
  };

  for (const auto &r : records)
  {
    buf += csv_field(r.date) + ',' + csv_field(r.client) + ',' + csv_field(r.isp) + ',' +
           csv_field(r.country.value_or("")) + ',' + csv_field(r.qname) + ',' + csv_field(r.qtype) +
           ',' + csv_field(r.rcode) + ',' + csv_field(r.answer.value_or("")) + '\n';
    if (buf.size() > (1 << 20))
      flush();
  }
  flush();
  if (gz)
    gzclose(gzf);
}

// Snapshot of common public suffixes. Enough for the corpora this lab
// generates; load a full list for real logs.
SuffixList SuffixList::builtin()
{
  return parse(R"(com
org
net
edu
gov
mil
int
info
biz
io
co
me
tv
us
uk
co.uk
org.uk
ac.uk
gov.uk
de
fr
nl
it
es
ru
cn
com.cn
jp
co.jp
ne.jp
br
com.br
au
com.au
net.au
in
co.in
ca
eu
ch
se
no
pl
kr
co.kr
za
co.za
mx
com.mx
ar
com.ar
il
co.il
*.ck
!www.ck
)");
}

SuffixList SuffixList::parse(std::string_view text)
{
  SuffixList list;
  std::size_t pos = 0;
  while (pos <= text.size())
  {
    auto nl = text.find('\n', pos);
    auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (!line.empty() && line.substr(0, 2) != "//")
      list.add_rule(line.substr(0, line.find_first_of(" \t")));
    if (nl == std::string_view::npos)
      break;
    pos = nl + 1;
  }
  return list;
}

SuffixList SuffixList::load(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read suffix list " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void SuffixList::add_rule(std::string_view rule)
{
  auto r = lower(strip_dot(rule));
  if (r.empty())
    return;
  if (r[0] == '!')
    exception_.insert(r.substr(1));
  else if (r.rfind("*.", 0) == 0)
    wildcard_.insert(r.substr(2));
  else
    exact_.insert(r);
}

std::size_t SuffixList::suffix_labels(const std::vector<std::string_view> &labels) const
{
  const std::size_t n = labels.size();
  // Exception rules win outright; the suffix is the rule minus its leftmost label.
  for (std::size_t i = 0; i < n; ++i)
    if (exception_.count(join(labels, i)))
      return n - i - 1;
  for (std::size_t i = 0; i < n; ++i)
  {
    if (exact_.count(join(labels, i)))
      return n - i;
    if (i + 1 < n && wildcard_.count(join(labels, i + 1)))
      return n - i;
  }
  return 0;
}

std::string registered_zone(std::string_view qname, const SuffixList &suffixes)
{
  const auto lowered = lower(strip_dot(trim(qname)));
  const auto labels = split_labels(lowered);
  if (labels.size() <= 1)
    return lowered;
  std::size_t keep = suffixes.suffix_labels(labels);
  keep = keep == 0 ? 2 : keep + 1;
  if (keep >= labels.size())
    return lowered;
  return join(labels, labels.size() - keep);
}

bool has_ipv4_prefix(std::string_view qname)
{
  const auto labels = split_labels(qname);
  if (labels.size() < 5)
    return false;
  for (std::size_t i = 0; i < 4; ++i)
  {
    const auto l = labels[i];
    if (l.empty() || l.size() > 3 || (l.size() > 1 && l[0] == '0'))
      return false;
    int v = 0;
    for (char c : l)
    {
      if (c < '0' || c > '9')
        return false;
      v = v * 10 + (c - '0');
    }
    if (v > 255)
      return false;
  }
  return true;
}

bool has_hash_label(std::string_view qname)
{
  auto dot = qname.find('.');
  auto l = qname.substr(0, dot);
  if (l.size() != 32)
    return false;
  return std::all_of(l.begin(), l.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  });
}

std::string first_label(std::string_view qname)
{
  return lower(qname.substr(0, qname.find('.')));
}

double ZoneStats::ip_label_fraction() const
{
  return queries ? static_cast<double>(ip_structured) / static_cast<double>(queries) : 0.0;
}

double ZoneStats::hash_label_fraction() const
{
  return queries ? static_cast<double>(hash_structured) / static_cast<double>(queries) : 0.0;
}

std::uint64_t ZoneStats::unique_clients(const std::string &day) const
{
  auto it = daily_clients.find(day);
  return it == daily_clients.end() ? 0 : it->second.size();
}

void ZoneStats::merge(const ZoneStats &o)
{
  queries += o.queries;
  ip_structured += o.ip_structured;
  hash_structured += o.hash_structured;
  for (const auto &[d, n] : o.daily_counts)
    daily_counts[d] += n;
  for (const auto &[d, s] : o.daily_clients)
    daily_clients[d].insert(s.begin(), s.end());
  for (const auto &[d, s] : o.daily_countries)
    daily_countries[d].insert(s.begin(), s.end());
  for (const auto &[l, n] : o.first_labels)
    first_labels[l] += n;
}

Aggregator::Aggregator(SuffixList suffixes) : suffixes_(std::move(suffixes)) {}

void Aggregator::add(const LogRecord &r)
{
  const auto name = lower(strip_dot(r.qname));
  const auto zone = registered_zone(name, suffixes_);
  days_.insert(r.date);
  auto &z = zones_[zone];
  if (z.zone.empty())
    z.zone = zone;
  ++z.queries;
  ++z.daily_counts[r.date];
  z.daily_clients[r.date].insert(r.client);
  if (r.country)
    z.daily_countries[r.date].insert(*r.country);
  if (has_ipv4_prefix(name))
    ++z.ip_structured;
  if (has_hash_label(name))
    ++z.hash_structured;
  ++z.first_labels[first_label(name)];
}

void Aggregator::merge(const Aggregator &o)
{
  days_.insert(o.days_.begin(), o.days_.end());
  for (const auto &[name, stats] : o.zones_)
  {
    auto &z = zones_[name];
    if (z.zone.empty())
      z.zone = name;
    z.merge(stats);
  }
}

double Aggregator::mean_daily_queries(const std::string &zone) const
{
  auto it = zones_.find(zone);
  if (it == zones_.end() || days_.empty())
    return 0.0;
  return static_cast<double>(it->second.queries) / static_cast<double>(days_.size());
}

std::map<std::string, ZoneStats> aggregate(const std::vector<LogRecord> &records,
                                           const SuffixList &suffixes)
{
  Aggregator agg(suffixes);
  for (const auto &r : records)
    agg.add(r);
  return agg.zones();
}

double tun_score(const std::unordered_map<std::string, std::uint64_t> &first_labels,
                 const TunHeuristic &h)
{
  std::uint64_t total = 0;
  double entropy_sum = 0;
  static const double kMaxEntropy = std::log2(36.0);
  for (const auto &[label, n] : first_labels)
  {
    total += n;
    if (label.empty())
      continue;
    std::array<std::uint32_t, 256> freq{};
    for (unsigned char c : label)
      ++freq[c];
    double e = 0;
    for (auto f : freq)
      if (f)
      {
        double p = static_cast<double>(f) / static_cast<double>(label.size());
        e -= p * std::log2(p);
      }
    entropy_sum += std::min(1.0, e / kMaxEntropy) * static_cast<double>(n);
  }
  if (total == 0)
    return 0.0;
  const double entropy = entropy_sum / static_cast<double>(total);
  const double unique = total > 1 ? static_cast<double>(first_labels.size() - 1) / static_cast<double>(total - 1) : 0.0;
  return h.w_entropy * entropy + h.w_unique * unique;
}

SearchConfig SearchConfig::load(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read search config " + path.string());
  auto j = nlohmann::json::parse(in);
  SearchConfig c;
  c.theta = j.value("theta", c.theta);
  c.structure_fraction = j.value("structure_fraction", c.structure_fraction);
  // Relative paths resolve against the config file's directory.
  auto resolve = [&](const std::string &p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp : path.parent_path() / fp;
  };
  if (j.contains("category_list"))
    c.category_list = resolve(j["category_list"].get<std::string>());
  if (j.contains("suffix_list"))
    c.suffix_list = resolve(j["suffix_list"].get<std::string>());
  if (j.contains("tun"))
  {
    const auto &t = j["tun"];
    c.tun.enabled = t.value("enabled", c.tun.enabled);
    c.tun.w_entropy = t.value("w_entropy", c.tun.w_entropy);
    c.tun.w_unique = t.value("w_unique", c.tun.w_unique);
    c.tun.cutoff = t.value("cutoff", c.tun.cutoff);
  }
  c.validate();
  return c;
}

void SearchConfig::validate() const
{
  if (!(theta > 0))
    throw std::invalid_argument("theta must be positive");
  if (!(structure_fraction > 0 && structure_fraction <= 1))
    throw std::invalid_argument("structure_fraction must be in (0, 1]");
}

std::set<std::string> load_category_list(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw MissingCategoryList("cannot read " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line))
  {
    auto t = trim(line.substr(0, line.find('#')));
    if (!t.empty())
      out.insert(lower(strip_dot(t)));
  }
  return out;
}

std::vector<SuspectedZone> search_dnsaml(const Aggregator &agg, const SearchConfig &config,
                                         const std::set<std::string> &categories)
{
  config.validate();
  std::vector<SuspectedZone> out;
  for (const auto &[name, z] : agg.zones())
  {
    const double mean = agg.mean_daily_queries(name);
    if (mean < config.theta || !categories.count(name))
      continue;
    SuspectedZone s;
    s.zone = name;
    s.mean_daily_queries = mean;
    s.ip_fraction = z.ip_label_fraction();
    s.hash_fraction = z.hash_label_fraction();
    s.s_ip = s.ip_fraction >= config.structure_fraction;
    s.s_hash = s.hash_fraction >= config.structure_fraction;
    if (config.tun.enabled)
    {
      s.tun = tun_score(z.first_labels, config.tun);
      s.s_tun = s.tun >= config.tun.cutoff;
    }
    if (s.s_ip || s.s_hash || s.s_tun)
      out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const SuspectedZone &a, const SuspectedZone &b) {
    if (a.mean_daily_queries != b.mean_daily_queries)
      return a.mean_daily_queries > b.mean_daily_queries;
    return a.zone < b.zone;
  });
  return out;
}

std::vector<SuspectedZone> search_dnsaml(const Aggregator &agg, const SearchConfig &config)
{
  if (!config.category_list)
    throw MissingCategoryList("no category list configured");
  return search_dnsaml(agg, config, load_category_list(*config.category_list));
}

std::vector<Prevalence> prevalence(const Aggregator &agg, const std::vector<std::string> &zones)
{
  std::vector<Prevalence> out;
  const double days = static_cast<double>(agg.days().size());
  for (const auto &name : zones)
  {
    Prevalence p;
    p.zone = name;
    auto it = agg.zones().find(name);
    if (it != agg.zones().end() && days > 0)
    {
      std::uint64_t clients = 0, countries = 0;
      for (const auto &[d, s] : it->second.daily_clients)
        clients += s.size();
      for (const auto &[d, s] : it->second.daily_countries)
        countries += s.size();
      p.classifications = static_cast<double>(it->second.queries) / days;
      p.unique_agents = static_cast<double>(clients) / days;
      p.countries = static_cast<double>(countries) / days;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<DailyDeletions> deletion_rate(const std::vector<LogRecord> &records,
                                          std::string_view zone, std::string_view deletion_answer)
{
  const auto suffix = lower(strip_dot(zone));
  const auto dotted = "." + suffix;
  struct Day
  {
    std::uint64_t total{0}, deletions{0};
    std::unordered_set<std::string> labels;
  };
  std::map<std::string, Day> days;
  for (const auto &r : records)
  {
    auto &d = days[r.date];
    const auto name = lower(strip_dot(r.qname));
    if (name != suffix && !(name.size() > dotted.size() && name.compare(name.size() - dotted.size(), dotted.size(), dotted) == 0))
      continue;
    ++d.total;
    d.labels.insert(first_label(name));
    if (r.answer && *r.answer == deletion_answer)
      ++d.deletions;
  }
  std::vector<DailyDeletions> out;
  for (const auto &[day, d] : days)
    out.push_back(DailyDeletions{day, d.total, d.labels.size(), d.deletions});
  return out;
}

std::string suspects_csv(const std::vector<SuspectedZone> &zones)
{
  std::ostringstream out;
  out << "zone,mean_daily_queries,s_ip,s_hash,s_tun,ip_fraction,hash_fraction,tun_score\n";
  for (const auto &z : zones)
    out << z.zone << ',' << z.mean_daily_queries << ',' << z.s_ip << ',' << z.s_hash << ','
        << z.s_tun << ',' << z.ip_fraction << ',' << z.hash_fraction << ',' << z.tun << '\n';
  return out.str();
}

std::string prevalence_csv(const std::vector<Prevalence> &rows)
{
  std::ostringstream out;
  out << "zone,mean_daily_classifications,mean_daily_unique_agents,mean_daily_countries\n";
  for (const auto &p : rows)
    out << p.zone << ',' << p.classifications << ',' << p.unique_agents << ',' << p.countries << '\n';
  return out.str();
}

std::string deletions_csv(const std::vector<DailyDeletions> &rows)
{
  std::ostringstream out;
  out << "day,total_scans,unique_signatures,deletion_responses\n";
  for (const auto &d : rows)
    out << d.day << ',' << d.total << ',' << d.unique_signatures << ',' << d.deletions << '\n';
  return out.str();
}

namespace
{

std::string day_string(std::chrono::sys_days d)
{
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::chrono::sys_days parse_day(std::string_view s)
{
  if (!valid_date(s))
    throw std::invalid_argument("bad date '" + std::string(s) + "'");
  auto num = [&](std::size_t pos, std::size_t len) { return std::stoi(std::string(s.substr(pos, len))); };
  return std::chrono::year_month_day{std::chrono::year{num(0, 4)},
                                     std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                     std::chrono::day{static_cast<unsigned>(num(8, 2))}};
}

std::string hex32(sim::Rng &rng)
{
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng.next()),
                static_cast<unsigned long long>(rng.next()));
  return buf;
}

std::uint64_t splitmix(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::array<const char *, 12> kWords{"www", "mail", "api", "cdn",    "static", "img",
                                              "login", "update", "m", "news", "shop",   "blog"};

} // namespace

CorpusSpec CorpusSpec::standard(std::uint64_t seed, std::size_t total_records, std::size_t noise_zones,
                                std::size_t days)
{
  CorpusSpec spec;
  spec.seed = seed;
  spec.days = days;
  const std::uint64_t span = std::max<std::size_t>(1, days);
  const std::uint64_t budget = std::max<std::uint64_t>(1, (total_records + span - 1) / span);
  const std::vector<std::string> world{"US", "DE", "BR", "IN", "JP", "FR", "GB", "IL", "CA"};

  auto planted = [&](std::string suffix, Structure st, std::uint64_t q, std::size_t clients) {
    ZoneSpec z;
    z.suffix = std::move(suffix);
    z.structure = st;
    z.queries_per_day = std::max<std::uint64_t>(q, 1500);
    z.clients = clients;
    z.countries = world;
    z.categorized = true;
    z.planted = true;
    return z;
  };
  auto cymru = planted("malware.hash.cymru.com", Structure::Hash, budget * 12 / 100, 800);
  cymru.signature_pool = 5000;
  cymru.answer = "";
  auto gti = planted("avts.mcafee.com", Structure::Hash, budget * 5 / 100, 400);
  gti.signature_pool = 3000;
  gti.answer = "127.64.0.128";
  gti.deletion_fraction = 0.03;
  gti.some_unknown_country = true;
  auto rbl = planted("zen.spamhaus.org", Structure::Ipv4, budget * 20 / 100, 1500);
  rbl.answer = "127.0.0.2";
  spec.zones = {cymru, gti, rbl};

  // Decoy kinds, cycled: popular plain sites (uncategorized, unstructured),
  // quiet hash services (below threshold), uncategorized IP lists, security
  // sites with only 1 in 20 structured queries, hash services at 999/day.
  std::uint64_t used = 0;
  for (const auto &z : spec.zones)
    used += z.queries_per_day;
  std::vector<std::size_t> fillers;
  for (std::size_t i = 0; i < noise_zones; ++i)
  {
    ZoneSpec z;
    z.countries = {world[i % world.size()], world[(i + 3) % world.size()]};
    z.clients = 60;
    z.answer = "198.51.100." + std::to_string(1 + i % 200);
    char name[64];
    switch (i % 5)
    {
    case 0:
      std::snprintf(name, sizeof name, "shop%zu.co.uk", i);
      z.suffix = name;
      z.clients = 200;
      fillers.push_back(spec.zones.size());
      break;
    case 1:
      std::snprintf(name, sizeof name, "scan.quiet%zu.com", i);
      z.suffix = name;
      z.structure = Structure::Hash;
      z.queries_per_day = 500;
      z.categorized = true;
      break;
    case 2:
      std::snprintf(name, sizeof name, "bl.rbl%zu.net", i);
      z.suffix = name;
      z.structure = Structure::Ipv4;
      z.queries_per_day = 1200;
      break;
    case 3:
      std::snprintf(name, sizeof name, "secvendor%zu.com", i);
      z.suffix = name;
      z.structure = Structure::Hash;
      z.structured_fraction = 0.05;
      z.queries_per_day = 1200;
      z.categorized = true;
      break;
    case 4:
      std::snprintf(name, sizeof name, "av.edge%zu.org", i);
      z.suffix = name;
      z.structure = Structure::Hash;
      z.queries_per_day = 999;
      z.categorized = true;
      break;
    }
    used += z.queries_per_day;
    spec.zones.push_back(std::move(z));
  }
  if (!fillers.empty())
  {
    const std::uint64_t rest = budget > used ? budget - used : 0;
    const std::uint64_t each = rest / fillers.size();
    const std::uint64_t extra = rest % fillers.size();
    for (std::size_t k = 0; k < fillers.size(); ++k)
      spec.zones[fillers[k]].queries_per_day = std::max<std::uint64_t>(100, each + (k < extra ? 1 : 0));
  }
  return spec;
}

std::string GroundTruth::to_json() const
{
  nlohmann::ordered_json j;
  j["records"] = records;
  j["categories"] = categories;
  auto zs = nlohmann::ordered_json::array();
  for (const auto &z : zones)
    zs.push_back({{"zone", z.zone},
                  {"planted", z.planted},
                  {"s_ip", z.s_ip},
                  {"s_hash", z.s_hash},
                  {"mean_daily_queries", z.mean_daily_queries},
                  {"mean_daily_clients", z.mean_daily_clients},
                  {"mean_daily_countries", z.mean_daily_countries}});
  j["zones"] = zs;
  auto del = nlohmann::ordered_json::object();
  for (const auto &[zone, series] : deletions)
  {
    auto arr = nlohmann::ordered_json::array();
    for (const auto &d : series)
      arr.push_back({{"day", d.day},
                     {"total", d.total},
                     {"unique_signatures", d.unique_signatures},
                     {"deletions", d.deletions}});
    del[zone] = arr;
  }
  j["deletions"] = del;
  return j.dump(2) + "\n";
}

Corpus generate_corpus(const CorpusSpec &spec)
{
  Corpus corpus;
  sim::Rng rng(spec.seed);
  const auto start = parse_day(spec.first_day);
  const auto suffixes = SuffixList::builtin();

  // Per-zone state that persists across days.
  struct State
  {
    std::vector<std::string> pool;
    std::vector<std::string> clients;
    std::vector<std::optional<std::string>> client_country;
    std::uint64_t client_days{0};
    std::uint64_t country_days{0};
  };
  std::vector<State> state(spec.zones.size());
  for (std::size_t zi = 0; zi < spec.zones.size(); ++zi)
  {
    const auto &z = spec.zones[zi];
    auto &s = state[zi];
    for (std::size_t i = 0; i < z.signature_pool; ++i)
      s.pool.push_back(hex32(rng));
    for (std::size_t i = 0; i < std::max<std::size_t>(1, z.clients); ++i)
    {
      char buf[24];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(splitmix(spec.seed ^ (zi << 32) ^ i)));
      s.clients.push_back(buf);
      if (z.countries.empty() || (z.some_unknown_country && i % 10 == 9))
        s.client_country.push_back(std::nullopt);
      else
        s.client_country.push_back(z.countries[i % z.countries.size()]);
    }
  }

  for (std::size_t day = 0; day < spec.days; ++day)
  {
    const auto date = day_string(start + std::chrono::days{static_cast<int>(day)});
    std::vector<LogRecord> today;
    for (std::size_t zi = 0; zi < spec.zones.size(); ++zi)
    {
      const auto &z = spec.zones[zi];
      auto &s = state[zi];
      const auto q = z.queries_per_day;
      const auto structured = static_cast<std::uint64_t>(std::llround(static_cast<double>(q) * z.structured_fraction));
      const auto deletions = static_cast<std::uint64_t>(std::llround(static_cast<double>(q) * z.deletion_fraction));
      std::set<std::string> clients_seen, countries_seen, labels_seen;
      std::uint64_t deleted = 0, zone_total = 0;

      for (std::uint64_t k = 0; k < q; ++k)
      {
        // Round-robin over the pool so every client shows up each day.
        const std::size_t ci = static_cast<std::size_t>(k % s.clients.size());
        LogRecord r;
        r.date = date;
        r.client = s.clients[ci];
        r.isp = "isp-" + std::to_string(ci % 7);
        r.country = s.client_country[ci];
        r.qtype = "A";

        std::string label;
        if (k < structured && z.structure == Structure::Ipv4)
        {
          auto x = rng.next();
          label = std::to_string(x & 0xff) + "." + std::to_string((x >> 8) & 0xff) + "." +
                  std::to_string((x >> 16) & 0xff) + "." + std::to_string((x >> 24) & 0xff);
        }
        else if (k < structured && z.structure == Structure::Hash)
          label = s.pool.empty() ? hex32(rng) : s.pool[rng.below(s.pool.size())];
        else
          label = kWords[rng.below(kWords.size())];
        r.qname = label + "." + z.suffix;

        if (k < deletions)
        {
          r.rcode = "NOERROR";
          r.answer = z.deletion_answer;
          ++deleted;
        }
        else if (z.answer.empty())
          r.rcode = "NXDOMAIN";
        else
        {
          r.rcode = "NOERROR";
          r.answer = z.answer;
        }

        clients_seen.insert(r.client);
        if (r.country)
          countries_seen.insert(*r.country);
        labels_seen.insert(label.substr(0, label.find('.')));
        ++zone_total;
        today.push_back(std::move(r));
      }
      s.client_days += clients_seen.size();
      s.country_days += countries_seen.size();
      if (z.deletion_fraction > 0)
        corpus.truth.deletions[z.suffix].push_back(DailyDeletions{date, zone_total, labels_seen.size(), deleted});
    }
    for (std::size_t i = today.size(); i > 1; --i)
      std::swap(today[i - 1], today[rng.below(i)]);
    for (auto &r : today)
      corpus.records.push_back(std::move(r));
  }

  std::set<std::string> categories;
  for (std::size_t zi = 0; zi < spec.zones.size(); ++zi)
  {
    const auto &z = spec.zones[zi];
    ZoneTruth t;
    t.zone = registered_zone(z.suffix, suffixes);
    t.planted = z.planted;
    t.s_ip = z.planted && z.structure == Structure::Ipv4;
    t.s_hash = z.planted && z.structure == Structure::Hash;
    const double days = static_cast<double>(std::max<std::size_t>(1, spec.days));
    if (spec.days > 0)
    {
      t.mean_daily_queries = static_cast<double>(z.queries_per_day * spec.days) / days;
      t.mean_daily_clients = static_cast<double>(state[zi].client_days) / days;
      t.mean_daily_countries = static_cast<double>(state[zi].country_days) / days;
    }
    if (z.categorized)
      categories.insert(t.zone);
    corpus.truth.zones.push_back(t);
  }
  corpus.truth.categories.assign(categories.begin(), categories.end());
  corpus.truth.records = corpus.records.size();
  return corpus;
}

void write_corpus(const Corpus &corpus, const fs::path &out_dir, bool gzip)
{
  fs::create_directories(out_dir);
  write_logs(out_dir / (gzip ? "logs.csv.gz" : "logs.csv"), corpus.records);
  std::ofstream(out_dir / "truth.json") << corpus.truth.to_json();
  std::ofstream cats(out_dir / "categories.txt");
  for (const auto &c : corpus.truth.categories)
    cats << c << "\n";
}

} // namespace dnsaml::hunter
