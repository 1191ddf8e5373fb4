#pragma once

#include "dnsaml/crypto.hpp"
#include "dnsaml/wire.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnsaml::dialect
{

using wire::DnsMessage;
using wire::DnsName;
using wire::Ipv4;

enum class DialectErrc
{
  InvalidSignature,
  SchemeMismatch,
  UnsupportedQtype,
  MalformedResponse,
  IncoherentReport,
};

const char *to_string(DialectErrc code);

class DialectError : public std::runtime_error
{
public:
  DialectError(DialectErrc code, const std::string &what);
  DialectErrc code() const noexcept { return code_; }

private:
  DialectErrc code_;
};

enum class Kind
{
  MHR,
  MalwareDB,
  GTI,
};

enum class HashScheme
{
  MD5,
  SHA1,
  Custom32Hex,
};

const char *to_string(Kind kind);
const char *to_string(HashScheme scheme);
Kind parse_kind(std::string_view text);
HashScheme parse_scheme(std::string_view text);

inline constexpr Ipv4 kMhrMalicious{127, 0, 0, 2};
inline constexpr Ipv4 kGtiDeletion{127, 64, 8, 8};
inline constexpr Ipv4 kGtiBenign{127, 64, 0, 128};
inline constexpr Ipv4 kNessusBenignA{40, 0, 0, 0};
inline constexpr Ipv4 kNessusBenignB{48, 0, 0, 0};
inline constexpr Ipv4 kNessusConnectivityOk{127, 0, 0, 1};
inline constexpr const char *kNessusCheckLabel = "chk";

struct Dialect
{
  Kind kind{Kind::MHR};
  DnsName zone;
  std::vector<DnsName> alternate_zones;
  HashScheme hash_scheme{HashScheme::MD5};
  // Addresses the service may answer with; used to build candidate spoof sets.
  std::vector<Ipv4> benign_responses;
  std::vector<Ipv4> malicious_responses;

  /// Defaults for each documented service.
  static Dialect defaults(Kind kind);

  /// Zone a QNAME falls under (primary or alternate), if any.
  const DnsName *owning_zone(const DnsName &qname) const;

  /// Throws SchemeMismatch when the scheme is not allowed for the kind.
  void validate() const;
};

/// A file's lookup label: 32 lowercase hex characters (40 for SHA-1).
class Signature
{
public:
  Signature(std::string hex, HashScheme scheme);

  const std::string &hex() const noexcept { return hex_; }
  HashScheme scheme() const noexcept { return scheme_; }

  static std::size_t expected_length(HashScheme scheme);

  friend bool operator==(const Signature &, const Signature &) = default;
  friend auto operator<=>(const Signature &a, const Signature &b) { return a.hex_ <=> b.hex_; }

private:
  std::string hex_;
  HashScheme scheme_;
};

/// Signature of file content under a dialect. A non-empty endpoint salt makes
/// the label host-specific (used only to build counterexamples).
Signature signature_for(const Dialect &dialect, std::span<const std::uint8_t> content,
                        std::string_view endpoint_salt = {});

enum class VerdictClass
{
  Benign,
  Malicious,
  Unknown,
};

const char *to_string(VerdictClass c);

struct NessusReport
{
  std::uint8_t engines_total{0};
  std::uint8_t engines_flagged{0};
  std::uint16_t engine_flags{0};

  /// Engine index 0 is the MSB of the third octet.
  bool engine_flagged(unsigned index) const { return (engine_flags >> (15 - index)) & 1u; }
  bool coherent() const;

  friend bool operator==(const NessusReport &, const NessusReport &) = default;
};

struct Verdict
{
  VerdictClass verdict{VerdictClass::Unknown};
  wire::RCode rcode{wire::RCode::NoError};
  std::vector<wire::ResourceRecord> raw;
  std::optional<NessusReport> report;
  bool confirmation_required{false};
};

DnsMessage build_lookup_query(const Dialect &dialect, const Signature &sig, wire::RType qtype,
                              std::uint16_t id = 0);

Verdict parse_lookup_response(const Dialect &dialect, const DnsMessage &response);

/// Total function over all 2^32 addresses.
NessusReport decode_nessus_report(const Ipv4 &addr);

/// Inverse of decode_nessus_report; prefix_bits fills the three ignored MSBs.
Ipv4 encode_nessus_report(const NessusReport &report, std::uint8_t prefix_bits);

DnsMessage gti_confirmation_query(const Signature &sig, const DnsName &zone, std::uint16_t id = 0);

std::string report_url(const Signature &sig);

} // namespace dnsaml::dialect
