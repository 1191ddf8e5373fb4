#pragma once

#include "dnsaml/dialects.hpp"
#include "dnsaml/sim.hpp"
#include "dnsaml/transport.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnsaml::agent
{

namespace fs = std::filesystem;
using dialect::Dialect;
using dialect::Signature;
using dialect::Verdict;
using wire::DnsMessage;

enum class AgentAction
{
  Ignore,
  Alert,
  Quarantine,
  Delete,
};

const char *to_string(AgentAction a);
AgentAction parse_action(std::string_view text);

/// A_B = {Ignore}; A_M = {Alert, Quarantine, Delete}.
inline bool is_benign_action(AgentAction a) { return a == AgentAction::Ignore; }
inline bool is_malicious_action(AgentAction a) { return a != AgentAction::Ignore; }

class ResolverTimeout : public std::runtime_error
{
public:
  explicit ResolverTimeout(const std::string &qname)
      : std::runtime_error("ResolverTimeout: no usable answer for " + qname)
  {
  }
};

class SandboxViolation : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct AgentPolicy
{
  Dialect dialect;
  AgentAction on_malicious{AgentAction::Alert};
  bool cache_ttl_respected{true};
  // GTI: check the signed TXT confirmation before deleting.
  bool verify_confirmation{true};
  std::optional<crypto::PublicKey> gti_pubkey;
  // Application-layer signing: reject unsigned or badly signed responses.
  std::optional<crypto::PublicKey> response_pubkey;
  // Swallow lookup failures instead of surfacing them in the scan summary.
  bool error_silent{false};
  // Non-empty only for counterexamples: per-host signature salt.
  std::string endpoint_salt;

  /// Per-dialect defaults: MHR/MalwareDB alert, GTI deletes.
  static AgentPolicy defaults(const Dialect &dialect);
  /// Throws std::invalid_argument when invariants fail.
  void validate() const;
};

enum class ScanStatus
{
  Completed,
  ResolverTimeout,
  MalformedResponse,
  IoError,
};

const char *to_string(ScanStatus s);

struct ScanOutcome
{
  std::string file_id;
  std::optional<Signature> signature;
  std::optional<DnsMessage> query;
  std::optional<DnsMessage> response;
  std::optional<Verdict> verdict;
  // Unset when no decision was reached (timeout, malformed answer, I/O error).
  std::optional<AgentAction> action;
  ScanStatus status{ScanStatus::Completed};
  std::vector<std::string> notes;
  // MalwareDB report link for alerted files.
  std::string report_url;
};

struct ScanSummary
{
  std::size_t files{0};
  std::size_t ignored{0};
  std::size_t alerts{0};
  std::size_t quarantined{0};
  std::size_t deleted{0};
  std::size_t errors{0};
  bool aborted{false};
  std::string abort_reason;
};

struct ScanReport
{
  std::vector<ScanOutcome> outcomes;
  ScanSummary summary;

  std::string to_jsonl() const;
  std::string summary_text() const;
};

Signature compute_signature(const AgentPolicy &policy, std::span<const std::uint8_t> content);

/// One endpoint: a policy, a sandbox directory, a resolver path and its cache.
class Agent
{
public:
  Agent(AgentPolicy policy, fs::path sandbox_root, transport::Transport &transport,
        sim::SimClock &clock, std::uint16_t first_query_id = 1);

  /// Throws ResolverTimeout.
  DnsMessage resolve(const DnsMessage &query);

  /// Throws SandboxViolation for paths outside the sandbox.
  ScanOutcome scan_file(const fs::path &path);
  ScanReport scan_directory(const fs::path &dir);
  /// Scans <sandbox>/files.
  ScanReport scan_sandbox() { return scan_directory(files_dir()); }

  fs::path files_dir() const { return root_ / "files"; }
  fs::path quarantine_dir() const { return root_ / "quarantine"; }
  const AgentPolicy &policy() const noexcept { return policy_; }
  const std::vector<ScanOutcome> &alerts() const noexcept { return alerts_; }
  transport::Transport &transport() noexcept { return transport_; }

private:
  struct CacheEntry
  {
    DnsMessage response;
    std::uint64_t expires_at;
  };

  bool inside_sandbox(const fs::path &p) const;
  bool connectivity_check(std::string &why);
  void confirm_deletion(const Signature &sig, const DnsMessage &lookup, ScanOutcome &out);
  void apply(AgentAction action, const fs::path &path, ScanOutcome &out);

  AgentPolicy policy_;
  fs::path root_;
  transport::Transport &transport_;
  sim::SimClock &clock_;
  std::uint16_t next_id_;
  std::map<std::pair<std::string, std::uint16_t>, CacheEntry> cache_;
  std::vector<ScanOutcome> alerts_;
};

/// Creates <root>/files and <root>/quarantine.
void prepare_sandbox(const fs::path &root);

} // namespace dnsaml::agent
