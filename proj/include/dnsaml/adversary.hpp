#pragma once

#include "dnsaml/sim.hpp"
#include "dnsaml/wire.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dnsaml::adversary
{

using wire::DnsMessage;
using wire::DnsName;

enum class Archetype
{
  None,
  MITM,
  OPSAM,
  OP,
};

/// Capability classes: complete eavesdropping (CE), complete tampering (CT),
/// limited probabilistic tampering (LT).
enum class Capability
{
  None,
  CE,
  CE_CT,
  LT,
};

const char *to_string(Archetype a);
const char *to_string(Capability c);
Archetype parse_archetype(std::string_view text);

enum class Direction
{
  ToService,
  ToAgent,
};

const char *to_string(Direction d);

struct RuleMatch
{
  enum class Kind
  {
    Any,
    Exact,
    Suffix,
  };
  Kind kind{Kind::Any};
  DnsName name;
  std::optional<wire::RType> qtype;

  bool matches(const wire::Question &q) const;
};

struct Forgery
{
  enum class Kind
  {
    A,
    NxDomain,
    Txt,
    Drop,
  };
  Kind kind{Kind::A};
  wire::Ipv4 address{};
  std::vector<std::string> txt;

  /// Short description, e.g. "A 127.0.0.2" or "NXDOMAIN".
  std::string describe() const;
};

struct SpoofRule
{
  RuleMatch match;
  Forgery forged;
};

struct AdversaryConfig
{
  Archetype archetype{Archetype::None};
  // Only meaningful for OPSAM/OP; MITM always succeeds.
  double success_prob{1.0};
  std::uint64_t rng_seed{0};
  std::vector<SpoofRule> rules;
  bool capture{true};
  // Restricts a MITM to passive observation (CE only).
  bool eavesdrop_only{false};
  // Flip a byte in every protected frame (tamper test for secure channels).
  bool tamper_frames{false};
  // Block secure-channel handshakes to force a downgrade.
  bool block_handshakes{false};

  Capability capability() const;
  /// Throws std::invalid_argument for p outside [0, 1].
  void validate() const;
};

enum class UnitKind
{
  Dns,
  Handshake,
  Frame,
};

struct CaptureEntry
{
  Direction direction{Direction::ToService};
  std::uint64_t tick{0};
  UnitKind kind{UnitKind::Dns};
  wire::Bytes bytes;
  std::optional<DnsMessage> message;
};

/// Append-only record of what the adversary observed.
class CaptureLog
{
public:
  void append(CaptureEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<CaptureEntry> &entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// One JSON object per line with the hex-encoded wire unit.
  std::string to_jsonl() const;

private:
  std::vector<CaptureEntry> entries_;
};

struct SpoofStats
{
  std::uint64_t attempts{0};
  std::uint64_t successes{0};
};

class Adversary
{
public:
  explicit Adversary(AdversaryConfig cfg);

  /// Returns the (possibly forged) message, or nullopt when it is dropped.
  std::optional<DnsMessage> interpose(const DnsMessage &msg, Direction direction);

  /// Protected transports: the adversary sees only opaque bytes.
  std::optional<wire::Bytes> interpose_frame(const wire::Bytes &frame, Direction direction,
                                             UnitKind kind);

  const AdversaryConfig &config() const noexcept { return cfg_; }
  const CaptureLog &log() const noexcept { return log_; }
  const SpoofStats &stats() const noexcept { return stats_; }
  bool can_eavesdrop() const;
  bool can_tamper() const;

  void set_rules(std::vector<SpoofRule> rules) { cfg_.rules = std::move(rules); }

  /// Logical clock of the channel; advances on every interposed unit.
  std::uint64_t tick() const noexcept { return tick_; }

private:
  bool attempt();
  void record(Direction d, UnitKind kind, const wire::Bytes &bytes,
              std::optional<DnsMessage> msg);

  AdversaryConfig cfg_;
  sim::Rng rng_;
  CaptureLog log_;
  SpoofStats stats_;
  std::uint64_t tick_{0};
};

/// Response to `query_or_response`'s question as dictated by the forgery.
std::optional<DnsMessage> forge_response(const DnsMessage &original, const Forgery &forged,
                                         std::uint32_t ttl = 300);

/// Signature label (first QNAME label as seen on the wire) to file id.
using Dictionary = std::map<std::string, std::string>;

struct TrafficMatch
{
  std::string file_id;
  std::uint64_t tick{0};
};

/// One hit per captured query whose first QNAME label is a dictionary key.
std::vector<TrafficMatch> match_traffic(const Dictionary &dict, const CaptureLog &log);

} // namespace dnsaml::adversary
