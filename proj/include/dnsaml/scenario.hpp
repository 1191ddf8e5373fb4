#pragma once

#include "dnsaml/harness.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace dnsaml::scenario
{

namespace fs = std::filesystem;

class ScenarioError : public std::runtime_error
{
public:
  explicit ScenarioError(const std::string &what) : std::runtime_error("ScenarioError: " + what) {}
};

/// "A 1.2.3.4", "NXDOMAIN", "DROP" or "TXT <text>".
adversary::Forgery parse_forgery(std::string_view text);

/// Everything an experiment needs. Relative paths in the file resolve
/// against the file's own directory.
struct Scenario
{
  dialect::Dialect dialect;
  std::optional<fs::path> registry_path;
  // F_B and F_M; the built-in fixture is used when both are absent.
  std::optional<fs::path> benign_dir;
  std::optional<fs::path> malicious_dir;
  // Files the attacker fingerprints for the disclosure attack.
  std::optional<fs::path> dictionary_dir;
  fs::path sandbox{"sandbox"};
  agent::AgentPolicy policy;
  adversary::AdversaryConfig adversary;
  countermeasures::CountermeasureMode countermeasure;
  harness::Scope scope{harness::Scope::LargeScale};
  bool salt_per_endpoint{false};
  std::optional<std::vector<adversary::Forgery>> candidate_responses;
  std::uint64_t seed{1};
  std::optional<fs::path> out;

  static Scenario load(const fs::path &path);
  static Scenario parse(std::string_view json_text, const fs::path &base_dir = {});
  /// Defaults for a dialect with no file at all.
  static Scenario for_dialect(dialect::Kind kind);

  /// The fixture, or files and registry read from disk when configured.
  harness::Fixture fixture() const;
  harness::ValidationSetup to_setup(const fs::path &work_dir) const;
};

std::vector<harness::FileSpec> read_file_set(const fs::path &dir);

} // namespace dnsaml::scenario
