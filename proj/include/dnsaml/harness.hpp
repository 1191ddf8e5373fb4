#pragma once

#include "dnsaml/adversary.hpp"
#include "dnsaml/agent.hpp"
#include "dnsaml/countermeasures.hpp"
#include "dnsaml/service.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnsaml::harness
{

namespace fs = std::filesystem;
using adversary::Forgery;
using countermeasures::CountermeasureMode;
using dialect::Dialect;

class SetupError : public std::runtime_error
{
public:
  explicit SetupError(const std::string &what) : std::runtime_error("SetupError: " + what) {}
};

struct FileSpec
{
  std::string id;
  wire::Bytes content;
};

/// Rule granularity: SP forges one file's QNAME, LS the whole zone.
enum class Scope
{
  Specific,
  LargeScale,
};

const char *to_string(Scope s);

struct ValidationSetup
{
  Dialect dialect;
  std::vector<FileSpec> benign;    // F_B
  std::vector<FileSpec> malicious; // F_M
  std::vector<Forgery> candidate_responses; // R_O
  service::Registry registry;
  agent::AgentPolicy policy;
  CountermeasureMode countermeasure;
  adversary::AdversaryConfig adversary;
  Scope scope{Scope::LargeScale};
  std::uint64_t seed{1};
  fs::path work_dir;
  // Counterexample agent: each endpoint salts its signatures differently.
  bool salt_per_endpoint{false};

  /// Throws SetupError when F_B and F_M overlap or R_O is empty.
  void validate() const;
};

struct SpoofAttempt
{
  std::string response;        // r_j
  std::string action;          // a(f, r_j)
  std::vector<std::string> notes;
};

struct FileTrace
{
  std::string file_id;
  // ATT-ID: labels observed on the wire for e1 and e2.
  std::optional<std::string> observed_e1;
  std::optional<std::string> observed_e2;
  // ATT-FA / ATT-S
  std::string service_response; // r(f)
  std::string action;           // a(f, r(f))
  std::vector<SpoofAttempt> spoofed;
  bool in_v{false};
};

struct ValidationTrace
{
  std::string attack;
  std::vector<FileTrace> files;
  std::vector<std::string> v; // V, by file id
  std::vector<std::string> warnings;
  std::string failure; // why False was returned early, if it was

  std::string to_jsonl() const;
};

struct ValidationResult
{
  bool feasible{false};
  ValidationTrace trace;
};

ValidationResult validate_att_id(const ValidationSetup &setup);
ValidationResult validate_att_fa(const ValidationSetup &setup);
ValidationResult validate_att_s(const ValidationSetup &setup);

/// R_O: every response the dialect's service can emit for this registry.
std::vector<Forgery> default_candidate_responses(const service::Registry &registry);

/// Deterministic benign and malicious file sets with a matching registry.
struct Fixture
{
  Dialect dialect;
  std::vector<FileSpec> benign;
  std::vector<FileSpec> malicious;
  service::Registry registry;
};

Fixture make_fixture(dialect::Kind kind, std::uint64_t seed);

/// Setup with defaults for the dialect, ready to validate.
ValidationSetup make_setup(const Fixture &fixture, CountermeasureMode mode,
                           adversary::Archetype archetype, double success_prob, std::uint64_t seed,
                           const fs::path &work_dir);

enum class Attack
{
  InformationDisclosure,
  FalseAlert,
  Silencing,
};

const char *to_string(Attack a);
Attack parse_attack(std::string_view text);

ValidationResult run_validation(Attack attack, const ValidationSetup &setup);

struct MatrixConfig
{
  std::vector<Attack> attacks{Attack::Silencing, Attack::FalseAlert, Attack::InformationDisclosure};
  std::vector<dialect::Kind> dialects{dialect::Kind::GTI, dialect::Kind::MalwareDB,
                                      dialect::Kind::MHR};
  std::vector<CountermeasureMode> modes{CountermeasureMode{}};
  std::vector<adversary::Archetype> archetypes{adversary::Archetype::MITM};
  // Success probability used for OPSAM/OP cells.
  double lt_success_prob{1.0};
  std::uint64_t seed{1};
  fs::path work_dir;
};

struct MatrixCell
{
  Attack attack;
  dialect::Kind dialect;
  std::string mode;
  adversary::Archetype archetype;
  std::optional<bool> result; // unset when the cell raised SetupError
  std::string error;
  ValidationTrace trace;
};

struct ResultTable
{
  std::vector<MatrixCell> cells;

  const MatrixCell *find(Attack attack, dialect::Kind dialect, std::string_view mode,
                         adversary::Archetype archetype) const;
  std::string to_csv() const;
  std::string to_pretty() const;
  std::string traces_jsonl() const;
};

ResultTable run_matrix(const MatrixConfig &config);

/// Attacker's own agent and service: scans each file once under an
/// eavesdropper and keys the dictionary by the signature label seen on the wire.
adversary::Dictionary build_dictionary(const agent::AgentPolicy &attacker_agent,
                                       const std::vector<FileSpec> &files, const fs::path &work_dir);

struct DisclosureResult
{
  std::vector<adversary::TrafficMatch> hits;
  std::size_t victim_queries{0};
  adversary::CaptureLog capture;
};

/// Victim endpoint scans `scanned` under the setup's adversary; the capture is
/// matched against `dict`.
DisclosureResult run_disclosure(const ValidationSetup &victim, const std::vector<FileSpec> &scanned,
                                const adversary::Dictionary &dict);

} // namespace dnsaml::harness
