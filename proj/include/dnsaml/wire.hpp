#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dnsaml::wire
{

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::size_t kMaxUdpPayload = 512;
inline constexpr std::size_t kMaxLabelLength = 63;
inline constexpr std::size_t kMaxNameLength = 255;
inline constexpr std::size_t kMaxCharacterString = 255;

enum class WireErrc
{
  InvalidName,
  Truncated,
  BadPointer,
  UnsupportedType,
  PayloadTooLarge,
  NotAQuery,
  InvalidRecord,
};

const char *to_string(WireErrc code);

class WireError : public std::runtime_error
{
public:
  WireError(WireErrc code, const std::string &what);
  WireErrc code() const noexcept { return code_; }

private:
  WireErrc code_;
};

enum class RType : std::uint16_t
{
  A = 1,
  TXT = 16,
};

enum class RCode : std::uint8_t
{
  NoError = 0,
  ServFail = 2,
  NxDomain = 3,
};

const char *to_string(RType type);
const char *to_string(RCode rcode);

/// A domain name held as its labels, validated on construction.
class DnsName
{
public:
  DnsName() = default;
  explicit DnsName(std::vector<std::string> labels);

  /// Parses presentation form ("a.example." or "a.example"). "." is the root.
  static DnsName parse(std::string_view text);

  const std::vector<std::string> &labels() const noexcept { return labels_; }
  bool is_root() const noexcept { return labels_.empty(); }

  /// Labels joined by '.' with a trailing dot.
  std::string to_string() const;
  /// Same as to_string() with ASCII letters lowered.
  std::string to_lower_string() const;

  /// New name with `label` prepended.
  DnsName prepend(std::string label) const;
  /// Case-insensitive suffix test on whole labels.
  bool is_subdomain_of(const DnsName &zone) const;
  /// Labels of this name left of `zone`; throws if not a subdomain.
  std::vector<std::string> relative_to(const DnsName &zone) const;

  /// Wire length of the uncompressed encoding (labels + length bytes + root).
  std::size_t wire_length() const;

  friend bool operator==(const DnsName &a, const DnsName &b);

private:
  std::vector<std::string> labels_;
};

void validate_labels(const std::vector<std::string> &labels);

using Ipv4 = std::array<std::uint8_t, 4>;

Ipv4 parse_ipv4(std::string_view text);
std::string ipv4_to_string(const Ipv4 &addr);

struct ResourceRecord
{
  DnsName name;
  RType type{RType::A};
  std::uint32_t ttl{0};
  // A: 4 bytes. TXT: list of character-strings.
  std::variant<Ipv4, std::vector<std::string>> rdata{Ipv4{}};

  static ResourceRecord a(DnsName name, Ipv4 addr, std::uint32_t ttl);
  static ResourceRecord txt(DnsName name, std::vector<std::string> strings, std::uint32_t ttl);

  const Ipv4 *ipv4() const { return std::get_if<Ipv4>(&rdata); }
  const std::vector<std::string> *txt_strings() const
  {
    return std::get_if<std::vector<std::string>>(&rdata);
  }

  /// RDATA exactly as it appears on the wire.
  Bytes rdata_bytes() const;

  friend bool operator==(const ResourceRecord &, const ResourceRecord &) = default;
};

struct Question
{
  DnsName name;
  RType type{RType::A};
  friend bool operator==(const Question &, const Question &) = default;
};

struct DnsMessage
{
  std::uint16_t id{0};
  bool is_response{false};
  RCode rcode{RCode::NoError};
  Question question;
  std::vector<ResourceRecord> answers;
  // Carries response signatures when application-layer signing is on.
  std::vector<ResourceRecord> additional;

  friend bool operator==(const DnsMessage &, const DnsMessage &) = default;
};

DnsMessage make_query(std::uint16_t id, DnsName name, RType type);

/// Builds a response echoing the query's id and question. NXDOMAIN drops answers.
DnsMessage make_response(const DnsMessage &query, std::vector<ResourceRecord> answers,
                         RCode rcode);

Bytes encode_message(const DnsMessage &msg);

struct DecodeOptions
{
  // Reject answer types other than A and TXT instead of skipping them.
  bool strict{true};
};

DnsMessage decode_message(std::span<const std::uint8_t> bytes, DecodeOptions opts = {});

/// Reads the 16-bit id of a datagram if at least the header is present.
bool peek_header(std::span<const std::uint8_t> bytes, std::uint16_t &id);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

} // namespace dnsaml::wire
