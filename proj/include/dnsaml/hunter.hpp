#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dnsaml::hunter
{

namespace fs = std::filesystem;

class FormatError : public std::runtime_error
{
public:
  explicit FormatError(const std::string &what) : std::runtime_error("FormatError: " + what) {}
};

class MissingCategoryList : public std::runtime_error
{
public:
  explicit MissingCategoryList(const std::string &what)
      : std::runtime_error("MissingCategoryList: " + what)
  {
  }
};

/// One logged DNS query.
struct LogRecord
{
  std::string date; // YYYY-MM-DD
  std::string client;
  std::string isp;
  std::optional<std::string> country;
  std::string qname;
  std::string qtype;
  std::string rcode;
  std::optional<std::string> answer;

  bool operator==(const LogRecord &) const = default;
};

bool valid_date(std::string_view text);

struct IngestStats
{
  std::size_t records{0};
  std::size_t malformed{0};
};

/// Streams CSV (with header) or JSONL records; gzip input is detected from
/// the magic bytes. Malformed lines are counted and skipped.
/// Throws FormatError when the header is unrecognizable or the file is unreadable.
IngestStats for_each_record(const fs::path &path, const std::function<void(LogRecord &&)> &fn);

std::vector<LogRecord> ingest_logs(const fs::path &path, IngestStats *stats = nullptr);

/// Writes CSV, gzip-compressed when the path ends in ".gz".
void write_logs(const fs::path &path, const std::vector<LogRecord> &records);

/// Public-suffix rules: plain suffixes, "*." wildcards and "!" exceptions.
class SuffixList
{
public:
  /// Small snapshot covering the usual generic and country-code suffixes.
  static SuffixList builtin();
  /// One rule per line; "//" comments and blank lines ignored.
  static SuffixList load(const fs::path &path);
  static SuffixList parse(std::string_view text);

  void add_rule(std::string_view rule);
  /// Number of labels in the public suffix of `labels`, 0 when no rule matches.
  std::size_t suffix_labels(const std::vector<std::string_view> &labels) const;

private:
  std::unordered_set<std::string> exact_;
  std::unordered_set<std::string> wildcard_;
  std::unordered_set<std::string> exception_;
};

/// Effective TLD + 1, lowercased, without trailing dot. Falls back to the last
/// two labels when no suffix rule matches.
std::string registered_zone(std::string_view qname, const SuffixList &suffixes);

/// Leading labels of `qname` form a dotted-quad IPv4 address (each octet 0..255).
bool has_ipv4_prefix(std::string_view qname);
/// First label is exactly 32 ASCII alphanumerics.
bool has_hash_label(std::string_view qname);
std::string first_label(std::string_view qname);

struct ZoneStats
{
  std::string zone;
  std::uint64_t queries{0};
  std::map<std::string, std::uint64_t> daily_counts;
  std::map<std::string, std::unordered_set<std::string>> daily_clients;
  std::map<std::string, std::unordered_set<std::string>> daily_countries;
  std::uint64_t ip_structured{0};
  std::uint64_t hash_structured{0};
  // First label of each query with its multiplicity; feeds the tunneling heuristic.
  std::unordered_map<std::string, std::uint64_t> first_labels;

  double ip_label_fraction() const;
  double hash_label_fraction() const;
  std::uint64_t unique_clients(const std::string &day) const;

  void merge(const ZoneStats &other);
  bool operator==(const ZoneStats &) const = default;
};

/// Commutative fold of records into per-zone statistics.
class Aggregator
{
public:
  explicit Aggregator(SuffixList suffixes = SuffixList::builtin());

  void add(const LogRecord &r);
  /// Associative and commutative; shards may be folded in any order.
  void merge(const Aggregator &other);

  const std::map<std::string, ZoneStats> &zones() const noexcept { return zones_; }
  /// Days present anywhere in the corpus; the denominator of every mean.
  const std::set<std::string> &days() const noexcept { return days_; }
  const SuffixList &suffixes() const noexcept { return suffixes_; }

  double mean_daily_queries(const std::string &zone) const;

  bool operator==(const Aggregator &o) const { return zones_ == o.zones_ && days_ == o.days_; }

private:
  SuffixList suffixes_;
  std::map<std::string, ZoneStats> zones_;
  std::set<std::string> days_;
};

std::map<std::string, ZoneStats> aggregate(const std::vector<LogRecord> &records,
                                           const SuffixList &suffixes = SuffixList::builtin());

struct TunHeuristic
{
  bool enabled{false};
  double w_entropy{0.5};
  double w_unique{0.5};
  double cutoff{0.5};
};

/// w_entropy * mean per-query label entropy (normalised by log2 36)
/// + w_unique * (distinct labels - 1) / (queries - 1).
double tun_score(const std::unordered_map<std::string, std::uint64_t> &first_labels,
                 const TunHeuristic &h = {});

struct SearchConfig
{
  double theta{1000.0};
  double structure_fraction{0.10};
  std::optional<fs::path> category_list;
  std::optional<fs::path> suffix_list;
  TunHeuristic tun;

  /// JSON object with any of: theta, structure_fraction, category_list,
  /// suffix_list, tun {enabled, w_entropy, w_unique, cutoff}.
  static SearchConfig load(const fs::path &path);
  /// Throws std::invalid_argument.
  void validate() const;
};

/// One registered domain per line; '#' comments. Throws MissingCategoryList.
std::set<std::string> load_category_list(const fs::path &path);

struct SuspectedZone
{
  std::string zone;
  double mean_daily_queries{0};
  bool s_ip{false};
  bool s_hash{false};
  bool s_tun{false};
  double ip_fraction{0};
  double hash_fraction{0};
  double tun{0};
};

/// X_C1 ∩ X_C2 ∩ (S_IP ∪ S_HASH ∪ S_TUN), by descending mean daily queries.
std::vector<SuspectedZone> search_dnsaml(const Aggregator &agg, const SearchConfig &config,
                                         const std::set<std::string> &categories);
/// Loads config.category_list; throws MissingCategoryList when it is unset.
std::vector<SuspectedZone> search_dnsaml(const Aggregator &agg, const SearchConfig &config);

struct Prevalence
{
  std::string zone;
  double classifications{0};
  double unique_agents{0};
  double countries{0};
};

std::vector<Prevalence> prevalence(const Aggregator &agg, const std::vector<std::string> &zones);

struct DailyDeletions
{
  std::string day;
  std::uint64_t total{0};
  std::uint64_t unique_signatures{0};
  std::uint64_t deletions{0};
};

/// Per-day scans of names under `zone` and how many were answered `deletion_answer`.
std::vector<DailyDeletions> deletion_rate(const std::vector<LogRecord> &records,
                                          std::string_view zone,
                                          std::string_view deletion_answer = "127.64.8.8");

std::string suspects_csv(const std::vector<SuspectedZone> &zones);
std::string prevalence_csv(const std::vector<Prevalence> &rows);
std::string deletions_csv(const std::vector<DailyDeletions> &rows);

enum class Structure
{
  Plain,
  Ipv4,
  Hash,
};

struct ZoneSpec
{
  // Suffix the generated names sit under, e.g. "hash.cymru.com".
  std::string suffix;
  std::uint64_t queries_per_day{0};
  std::size_t clients{1};
  std::vector<std::string> countries;
  // Every tenth client reports no country when set.
  bool some_unknown_country{false};
  Structure structure{Structure::Plain};
  // Share of a day's queries carrying the structured label; the rest are plain words.
  double structured_fraction{1.0};
  // Distinct structured labels drawn from (0 = fresh label each query).
  std::size_t signature_pool{0};
  bool categorized{false};
  bool planted{false};
  std::string answer{"127.0.0.1"};
  double deletion_fraction{0.0};
  std::string deletion_answer{"127.64.8.8"};
};

struct CorpusSpec
{
  std::uint64_t seed{1};
  std::size_t days{10};
  std::string first_day{"2026-01-01"};
  std::vector<ZoneSpec> zones;

  /// Three planted services plus `noise_zones` decoys, scaled to roughly
  /// `total_records`; every decoy violates at least one search criterion.
  static CorpusSpec standard(std::uint64_t seed, std::size_t total_records,
                             std::size_t noise_zones = 54, std::size_t days = 10);
};

struct ZoneTruth
{
  std::string zone; // registered zone
  bool planted{false};
  bool s_ip{false};
  bool s_hash{false};
  double mean_daily_queries{0};
  double mean_daily_clients{0};
  double mean_daily_countries{0};
};

struct GroundTruth
{
  std::size_t records{0};
  std::vector<std::string> categories;
  std::vector<ZoneTruth> zones;
  // Keyed by query suffix.
  std::map<std::string, std::vector<DailyDeletions>> deletions;

  std::string to_json() const;
};

struct Corpus
{
  std::vector<LogRecord> records;
  GroundTruth truth;
};

/// Deterministic for a given spec; ground truth is tallied from the
/// generator's own construction.
Corpus generate_corpus(const CorpusSpec &spec);

/// Writes <out>/logs.csv[.gz], <out>/truth.json and <out>/categories.txt.
void write_corpus(const Corpus &corpus, const fs::path &out_dir, bool gzip = false);

} // namespace dnsaml::hunter
