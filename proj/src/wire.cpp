#include "dnsaml/wire.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace dnsaml::wire
{

const char *to_string(WireErrc code)
{
  switch (code)
  {
  case WireErrc::InvalidName: return "InvalidName";
  case WireErrc::Truncated: return "Truncated";
  case WireErrc::BadPointer: return "BadPointer";
  case WireErrc::UnsupportedType: return "UnsupportedType";
  case WireErrc::PayloadTooLarge: return "PayloadTooLarge";
  case WireErrc::NotAQuery: return "NotAQuery";
  case WireErrc::InvalidRecord: return "InvalidRecord";
  }
  return "Unknown";
}

WireError::WireError(WireErrc code, const std::string &what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

const char *to_string(RType type)
{
  switch (type)
  {
  case RType::A: return "A";
  case RType::TXT: return "TXT";
  }
  return "?";
}

const char *to_string(RCode rcode)
{
  switch (rcode)
  {
  case RCode::NoError: return "NOERROR";
  case RCode::ServFail: return "SERVFAIL";
  case RCode::NxDomain: return "NXDOMAIN";
  }
  return "?";
}

namespace
{

std::string lower(std::string_view s)
{
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool label_equal(std::string_view a, std::string_view b)
{
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

} // namespace

void validate_labels(const std::vector<std::string> &labels)
{
  std::size_t presentation = 0;
  for (const auto &label : labels)
  {
    if (label.empty())
      throw WireError(WireErrc::InvalidName, "empty label");
    if (label.size() > kMaxLabelLength)
      throw WireError(WireErrc::InvalidName,
                      "label of " + std::to_string(label.size()) + " bytes exceeds 63");
    presentation += label.size() + 1;
  }
  if (presentation > kMaxNameLength)
    throw WireError(WireErrc::InvalidName,
                    "name of " + std::to_string(presentation) + " characters exceeds 255");
}

DnsName::DnsName(std::vector<std::string> labels) : labels_(std::move(labels))
{
  validate_labels(labels_);
}

DnsName DnsName::parse(std::string_view text)
{
  if (text.empty() || text == ".")
    return DnsName{};
  if (text.back() == '.')
    text.remove_suffix(1);
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (true)
  {
    auto dot = text.find('.', start);
    labels.emplace_back(text.substr(start, dot == std::string_view::npos ? text.npos : dot - start));
    if (dot == std::string_view::npos)
      break;
    start = dot + 1;
  }
  return DnsName(std::move(labels));
}

std::string DnsName::to_string() const
{
  if (labels_.empty())
    return ".";
  std::string out;
  for (const auto &label : labels_)
  {
    out += label;
    out += '.';
  }
  return out;
}

std::string DnsName::to_lower_string() const { return lower(to_string()); }

DnsName DnsName::prepend(std::string label) const
{
  std::vector<std::string> labels;
  labels.reserve(labels_.size() + 1);
  labels.push_back(std::move(label));
  labels.insert(labels.end(), labels_.begin(), labels_.end());
  return DnsName(std::move(labels));
}

bool DnsName::is_subdomain_of(const DnsName &zone) const
{
  if (zone.labels_.size() > labels_.size())
    return false;
  auto offset = labels_.size() - zone.labels_.size();
  for (std::size_t i = 0; i < zone.labels_.size(); ++i)
    if (!label_equal(labels_[offset + i], zone.labels_[i]))
      return false;
  return true;
}

std::vector<std::string> DnsName::relative_to(const DnsName &zone) const
{
  if (!is_subdomain_of(zone))
    throw WireError(WireErrc::InvalidName, to_string() + " is not under " + zone.to_string());
  return {labels_.begin(), labels_.end() - static_cast<std::ptrdiff_t>(zone.labels_.size())};
}

std::size_t DnsName::wire_length() const
{
  std::size_t n = 1;
  for (const auto &label : labels_)
    n += label.size() + 1;
  return n;
}

bool operator==(const DnsName &a, const DnsName &b)
{
  if (a.labels_.size() != b.labels_.size())
    return false;
  for (std::size_t i = 0; i < a.labels_.size(); ++i)
    if (!label_equal(a.labels_[i], b.labels_[i]))
      return false;
  return true;
}

Ipv4 parse_ipv4(std::string_view text)
{
  Ipv4 out{};
  std::size_t octet = 0;
  const char *p = text.data();
  const char *end = text.data() + text.size();
  while (true)
  {
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc{} || next == p || next - p > 3 || value > 255)
      throw std::invalid_argument("bad IPv4 address: " + std::string(text));
    out[octet++] = static_cast<std::uint8_t>(value);
    p = next;
    if (octet == 4)
      break;
    if (p == end || *p != '.')
      throw std::invalid_argument("bad IPv4 address: " + std::string(text));
    ++p;
  }
  if (p != end)
    throw std::invalid_argument("bad IPv4 address: " + std::string(text));
  return out;
}

std::string ipv4_to_string(const Ipv4 &addr)
{
  return std::to_string(addr[0]) + "." + std::to_string(addr[1]) + "." + std::to_string(addr[2]) +
         "." + std::to_string(addr[3]);
}

ResourceRecord ResourceRecord::a(DnsName name, Ipv4 addr, std::uint32_t ttl)
{
  return ResourceRecord{std::move(name), RType::A, ttl, addr};
}

ResourceRecord ResourceRecord::txt(DnsName name, std::vector<std::string> strings,
                                   std::uint32_t ttl)
{
  for (const auto &s : strings)
    if (s.size() > kMaxCharacterString)
      throw WireError(WireErrc::InvalidRecord, "TXT character-string exceeds 255 bytes");
  return ResourceRecord{std::move(name), RType::TXT, ttl, std::move(strings)};
}

Bytes ResourceRecord::rdata_bytes() const
{
  Bytes out;
  if (type == RType::A)
  {
    const Ipv4 *addr = ipv4();
    if (!addr)
      throw WireError(WireErrc::InvalidRecord, "A record without IPv4 rdata");
    out.assign(addr->begin(), addr->end());
    return out;
  }
  const auto *strings = txt_strings();
  if (!strings)
    throw WireError(WireErrc::InvalidRecord, "TXT record without string rdata");
  for (const auto &s : *strings)
  {
    if (s.size() > kMaxCharacterString)
      throw WireError(WireErrc::InvalidRecord, "TXT character-string exceeds 255 bytes");
    out.push_back(static_cast<std::uint8_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

DnsMessage make_query(std::uint16_t id, DnsName name, RType type)
{
  DnsMessage msg;
  msg.id = id;
  msg.question = Question{std::move(name), type};
  return msg;
}

DnsMessage make_response(const DnsMessage &query, std::vector<ResourceRecord> answers, RCode rcode)
{
  if (query.is_response)
    throw WireError(WireErrc::NotAQuery, "cannot answer a response");
  DnsMessage resp;
  resp.id = query.id;
  resp.is_response = true;
  resp.rcode = rcode;
  resp.question = query.question;
  if (rcode != RCode::NxDomain)
    resp.answers = std::move(answers);
  return resp;
}

namespace
{

void put16(Bytes &out, std::uint16_t v)
{
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put32(Bytes &out, std::uint32_t v)
{
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v & 0xffff));
}

void put_name(Bytes &out, const DnsName &name)
{
  validate_labels(name.labels());
  for (const auto &label : name.labels())
  {
    out.push_back(static_cast<std::uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  out.push_back(0);
}

void put_record(Bytes &out, const ResourceRecord &rr)
{
  put_name(out, rr.name);
  put16(out, static_cast<std::uint16_t>(rr.type));
  put16(out, 1); // IN
  put32(out, rr.ttl);
  Bytes rdata = rr.rdata_bytes();
  if (rdata.size() > 0xffff)
    throw WireError(WireErrc::InvalidRecord, "rdata too long");
  put16(out, static_cast<std::uint16_t>(rdata.size()));
  out.insert(out.end(), rdata.begin(), rdata.end());
}

class Reader
{
public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t pos() const { return pos_; }

  std::uint8_t u8()
  {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16()
  {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32()
  {
    std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  std::span<const std::uint8_t> take(std::size_t n)
  {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  // Follows compression pointers; only backward pointers are accepted, which
  // also rules out loops.
  DnsName name()
  {
    std::vector<std::string> labels;
    std::size_t cursor = pos_;
    bool jumped = false;
    std::size_t presentation = 0;
    while (true)
    {
      if (cursor >= data_.size())
        throw WireError(WireErrc::Truncated, "name runs past end of message");
      std::uint8_t len = data_[cursor];
      if ((len & 0xc0) == 0xc0)
      {
        if (cursor + 1 >= data_.size())
          throw WireError(WireErrc::Truncated, "truncated compression pointer");
        std::size_t target = static_cast<std::size_t>(((len & 0x3f) << 8) | data_[cursor + 1]);
        if (target >= cursor)
          throw WireError(WireErrc::BadPointer, "compression pointer does not point backwards");
        if (!jumped)
          pos_ = cursor + 2;
        jumped = true;
        cursor = target;
        continue;
      }
      if ((len & 0xc0) != 0)
        throw WireError(WireErrc::InvalidName, "reserved label type");
      if (len == 0)
      {
        if (!jumped)
          pos_ = cursor + 1;
        break;
      }
      if (cursor + 1 + len > data_.size())
        throw WireError(WireErrc::Truncated, "label runs past end of message");
      labels.emplace_back(reinterpret_cast<const char *>(&data_[cursor + 1]), len);
      presentation += len + 1;
      if (presentation > kMaxNameLength)
        throw WireError(WireErrc::InvalidName, "name exceeds 255 characters");
      cursor += 1 + len;
    }
    return DnsName(std::move(labels));
  }

private:
  void need(std::size_t n) const
  {
    if (pos_ + n > data_.size())
      throw WireError(WireErrc::Truncated, "message truncated at offset " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_{0};
};

RType checked_type(std::uint16_t raw)
{
  if (raw == static_cast<std::uint16_t>(RType::A) || raw == static_cast<std::uint16_t>(RType::TXT))
    return static_cast<RType>(raw);
  throw WireError(WireErrc::UnsupportedType, "record type " + std::to_string(raw));
}

RCode checked_rcode(std::uint8_t raw)
{
  switch (raw)
  {
  case 0: return RCode::NoError;
  case 2: return RCode::ServFail;
  case 3: return RCode::NxDomain;
  default: throw WireError(WireErrc::UnsupportedType, "rcode " + std::to_string(raw));
  }
}

// Returns false for a skipped (non-strict, unsupported type) record.
bool read_record(Reader &in, ResourceRecord &rr, bool strict)
{
  DnsName name = in.name();
  std::uint16_t raw_type = in.u16();
  in.u16(); // class
  std::uint32_t ttl = in.u32();
  std::uint16_t rdlen = in.u16();
  auto rdata = in.take(rdlen);

  if (raw_type != static_cast<std::uint16_t>(RType::A) &&
      raw_type != static_cast<std::uint16_t>(RType::TXT))
  {
    if (strict)
      throw WireError(WireErrc::UnsupportedType, "record type " + std::to_string(raw_type));
    return false;
  }
  rr.name = std::move(name);
  rr.type = static_cast<RType>(raw_type);
  rr.ttl = ttl;
  if (rr.type == RType::A)
  {
    if (rdlen != 4)
      throw WireError(WireErrc::InvalidRecord, "A rdata must be 4 bytes");
    rr.rdata = Ipv4{rdata[0], rdata[1], rdata[2], rdata[3]};
    return true;
  }
  std::vector<std::string> strings;
  std::size_t i = 0;
  while (i < rdata.size())
  {
    std::size_t len = rdata[i];
    if (i + 1 + len > rdata.size())
      throw WireError(WireErrc::Truncated, "TXT character-string overruns rdata");
    strings.emplace_back(reinterpret_cast<const char *>(rdata.data() + i + 1), len);
    i += 1 + len;
  }
  rr.rdata = std::move(strings);
  return true;
}

} // namespace

Bytes encode_message(const DnsMessage &msg)
{
  if (!msg.is_response && (!msg.answers.empty() || !msg.additional.empty()))
    throw WireError(WireErrc::InvalidRecord, "a query carries no records");
  Bytes out;
  out.reserve(128);
  put16(out, msg.id);
  std::uint16_t flags = 0;
  if (msg.is_response)
    flags |= 0x8000 | 0x0400; // QR, AA
  else
    flags |= 0x0100; // RD
  flags |= static_cast<std::uint16_t>(msg.rcode) & 0x000f;
  put16(out, flags);
  put16(out, 1);
  put16(out, static_cast<std::uint16_t>(msg.answers.size()));
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(msg.additional.size()));
  put_name(out, msg.question.name);
  put16(out, static_cast<std::uint16_t>(msg.question.type));
  put16(out, 1);
  for (const auto &rr : msg.answers)
    put_record(out, rr);
  for (const auto &rr : msg.additional)
    put_record(out, rr);
  if (out.size() > kMaxUdpPayload)
    throw WireError(WireErrc::PayloadTooLarge,
                    "encoded message of " + std::to_string(out.size()) + " bytes exceeds 512");
  return out;
}

DnsMessage decode_message(std::span<const std::uint8_t> bytes, DecodeOptions opts)
{
  if (bytes.size() < kHeaderSize)
    throw WireError(WireErrc::Truncated,
                    "message of " + std::to_string(bytes.size()) + " bytes is shorter than the header");
  Reader in(bytes);
  DnsMessage msg;
  msg.id = in.u16();
  std::uint16_t flags = in.u16();
  msg.is_response = (flags & 0x8000) != 0;
  msg.rcode = checked_rcode(static_cast<std::uint8_t>(flags & 0x000f));
  std::uint16_t qd = in.u16();
  std::uint16_t an = in.u16();
  std::uint16_t ns = in.u16();
  std::uint16_t ar = in.u16();
  if (qd != 1)
    throw WireError(WireErrc::UnsupportedType, "expected exactly one question, got " + std::to_string(qd));
  msg.question.name = in.name();
  msg.question.type = checked_type(in.u16());
  in.u16();
  for (std::uint16_t i = 0; i < an; ++i)
  {
    ResourceRecord rr;
    if (read_record(in, rr, opts.strict))
      msg.answers.push_back(std::move(rr));
  }
  for (std::uint16_t i = 0; i < ns; ++i)
  {
    ResourceRecord rr;
    read_record(in, rr, false);
  }
  for (std::uint16_t i = 0; i < ar; ++i)
  {
    ResourceRecord rr;
    if (read_record(in, rr, opts.strict))
      msg.additional.push_back(std::move(rr));
  }
  return msg;
}

bool peek_header(std::span<const std::uint8_t> bytes, std::uint16_t &id)
{
  if (bytes.size() < kHeaderSize)
    return false;
  id = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
  return true;
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes)
  {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex)
{
  if (hex.size() % 2 != 0)
    throw std::invalid_argument("odd-length hex string");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument(std::string("bad hex digit '") + c + "'");
  };
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
  return out;
}

} // namespace dnsaml::wire
