// dnsaml-lab: command-line entry point to the DNSAML laboratory.

#include "dnsaml/harness.hpp"
#include "dnsaml/hunter.hpp"
#include "dnsaml/scenario.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace dnsaml;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitExpectMismatch = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFailure = 3;

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct Options
{
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string expect;
  std::string bind{"127.0.0.1:5353"};
  std::string registry;
  std::string corpus;
  std::string config;
  std::string attack;
  std::string dialect;
  bool bind_given{false};
};

fs::path out_dir(const Options &o, const scenario::Scenario *s = nullptr)
{
  if (!o.out.empty())
    return o.out;
  if (s && s->out)
    return *s->out;
  if (const char *env = std::getenv("DNSAML_LAB_OUT"))
    return env;
  return "dnsaml-out";
}

scenario::Scenario load_scenario(const Options &o)
{
  scenario::Scenario s;
  if (!o.scenario.empty())
    s = scenario::Scenario::load(o.scenario);
  else if (!o.dialect.empty())
    s = scenario::Scenario::for_dialect(dialect::parse_kind(o.dialect));
  else
    throw UsageError("--scenario is required");
  if (o.seed)
  {
    s.seed = *o.seed;
    s.adversary.rng_seed = *o.seed;
  }
  if (!o.registry.empty())
    s.registry_path = o.registry;
  return s;
}

std::pair<std::string, std::uint16_t> parse_bind(const std::string &text)
{
  auto colon = text.rfind(':');
  if (colon == std::string::npos)
    throw UsageError("--bind expects host:port");
  int port = std::stoi(text.substr(colon + 1));
  if (port < 0 || port > 65535)
    throw UsageError("port out of range");
  return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

void write_file(const fs::path &path, const std::string &content)
{
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// Copies the fixture (or configured files) into <sandbox>/files.
void stage_sandbox(const scenario::Scenario &s, const harness::Fixture &fx)
{
  fs::remove_all(s.sandbox);
  agent::prepare_sandbox(s.sandbox);
  auto put = [&](const harness::FileSpec &f) {
    std::ofstream out(s.sandbox / "files" / f.id, std::ios::binary);
    out.write(reinterpret_cast<const char *>(f.content.data()), static_cast<std::streamsize>(f.content.size()));
  };
  for (const auto &f : fx.benign)
    put(f);
  for (const auto &f : fx.malicious)
    put(f);
}

service::UdpServer *g_server = nullptr;

extern "C" void on_signal(int)
{
  if (g_server)
    g_server->stop();
}

int cmd_serve(const Options &o)
{
  auto s = load_scenario(o);
  auto fx = s.fixture();
  auto keys = countermeasures::KeyMaterial::derive(s.seed);
  service::LookupService svc(fx.registry, countermeasures::service_config_for(s.countermeasure, keys));
  auto [host, port] = parse_bind(o.bind);
  service::UdpServer server(svc, host, port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving " << dialect::to_string(s.dialect.kind) << " zone " << s.dialect.zone.to_string()
            << " on " << host << ":" << server.port() << " (" << fx.registry.entries.size()
            << " registry entries)" << std::endl;
  server.run();
  g_server = nullptr;
  const auto &c = server.counters();
  std::cout << "answered " << c.answered << ", servfail " << c.servfail << ", dropped " << c.dropped << "\n";
  return kExitOk;
}

// Shared by scan and attack; the adversary is attached only for attack.
int run_scan(const Options &o, bool attach_adversary)
{
  auto s = load_scenario(o);
  auto fx = s.fixture();
  const auto out = out_dir(o, &s);
  stage_sandbox(s, fx);

  auto keys = countermeasures::KeyMaterial::derive(s.seed);
  service::LookupService svc(fx.registry, countermeasures::service_config_for(s.countermeasure, keys));
  auto adv_cfg = s.adversary;
  if (s.countermeasure.downgrade)
    adv_cfg.block_handshakes = true;
  adversary::Adversary adv(adv_cfg);
  adversary::Adversary *tap = attach_adversary ? &adv : nullptr;

  std::unique_ptr<transport::Transport> channel;
  if (o.bind_given)
  {
    auto [host, port] = parse_bind(o.bind);
    channel = std::make_unique<transport::UdpTransport>(host, port, std::chrono::milliseconds(500), tap);
  }
  else
    channel = countermeasures::make_transport(s.countermeasure, svc, tap, keys, s.seed);

  auto policy = s.policy;
  countermeasures::configure_policy(policy, s.countermeasure, keys);
  sim::SimClock clock;
  agent::Agent agent(policy, s.sandbox, *channel, clock);
  auto report = agent.scan_sandbox();

  write_file(out / "scan.jsonl", report.to_jsonl());
  std::cout << report.summary_text();
  const auto m = channel->metrics();
  std::cout << "transport " << channel->name() << ": lookups " << m.lookups << ", round trips "
            << m.round_trips << ", cache hits " << m.cache_hits << ", handshakes " << m.handshakes << "\n";

  if (attach_adversary)
  {
    write_file(out / "capture.jsonl", adv.log().to_jsonl());
    std::cout << "adversary " << adversary::to_string(adv_cfg.archetype) << ": " << adv.stats().successes
              << " of " << adv.stats().attempts << " spoof attempts succeeded, " << adv.log().size()
              << " units captured\n";
    if (s.dictionary_dir)
    {
      auto dict = harness::build_dictionary(s.policy, scenario::read_file_set(*s.dictionary_dir),
                                            out / "attacker-agent");
      auto hits = adversary::match_traffic(dict, adv.log());
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (const auto &h : hits)
        j.push_back({{"file", h.file_id}, {"tick", h.tick}});
      write_file(out / "disclosure.json", j.dump(2) + "\n");
      std::cout << "dictionary of " << dict.size() << " signatures matched " << hits.size()
                << " victim queries\n";
    }
  }
  return report.summary.aborted ? kExitFailure : kExitOk;
}

int cmd_validate(const Options &o)
{
  auto attack = harness::parse_attack(o.attack);
  std::optional<bool> expect;
  if (o.expect == "true")
    expect = true;
  else if (o.expect == "false")
    expect = false;
  else if (!o.expect.empty())
    throw UsageError("--expect takes true or false");

  auto s = load_scenario(o);
  const auto out = out_dir(o, &s);
  auto setup = s.to_setup(out / "work");
  auto result = harness::run_validation(attack, setup);
  fs::remove_all(out / "work");
  write_file(out / (std::string(harness::to_string(attack)) + "-trace.jsonl"), result.trace.to_jsonl());

  std::cout << harness::to_string(attack) << " " << dialect::to_string(s.dialect.kind) << " "
            << s.countermeasure.name() << " " << adversary::to_string(s.adversary.archetype) << ": "
            << (result.feasible ? "true" : "false") << "\n";
  if (!result.trace.failure.empty())
    std::cout << "  " << result.trace.failure << "\n";
  for (const auto &w : result.trace.warnings)
    std::cerr << "warning: " << w << "\n";
  if (expect && *expect != result.feasible)
  {
    std::cerr << "expected " << (*expect ? "true" : "false") << "\n";
    return kExitExpectMismatch;
  }
  return kExitOk;
}

int cmd_matrix(const Options &o)
{
  harness::MatrixConfig cfg;
  cfg.modes = {countermeasures::CountermeasureMode::none(),
               countermeasures::CountermeasureMode::app_signing(),
               countermeasures::CountermeasureMode::dot(),
               countermeasures::CountermeasureMode::doh(),
               countermeasures::CountermeasureMode::doh_with_downgrade(),
               countermeasures::CountermeasureMode::rest()};
  if (!o.config.empty())
  {
    std::ifstream in(o.config);
    if (!in)
      throw UsageError("cannot read " + o.config);
    auto j = nlohmann::json::parse(in);
    if (j.contains("modes"))
    {
      cfg.modes.clear();
      for (const auto &m : j["modes"])
        cfg.modes.push_back(countermeasures::CountermeasureMode::parse(m.get<std::string>()));
    }
    if (j.contains("archetypes"))
    {
      cfg.archetypes.clear();
      for (const auto &a : j["archetypes"])
        cfg.archetypes.push_back(adversary::parse_archetype(a.get<std::string>()));
    }
    if (j.contains("dialects"))
    {
      cfg.dialects.clear();
      for (const auto &d : j["dialects"])
        cfg.dialects.push_back(dialect::parse_kind(d.get<std::string>()));
    }
    if (j.contains("attacks"))
    {
      cfg.attacks.clear();
      for (const auto &a : j["attacks"])
        cfg.attacks.push_back(harness::parse_attack(a.get<std::string>()));
    }
    cfg.lt_success_prob = j.value("lt_success_prob", cfg.lt_success_prob);
    cfg.seed = j.value("seed", cfg.seed);
  }
  if (o.seed)
    cfg.seed = *o.seed;
  const auto out = out_dir(o);
  cfg.work_dir = out / "work";
  auto table = harness::run_matrix(cfg);
  fs::remove_all(cfg.work_dir);

  write_file(out / "matrix.csv", table.to_csv());
  write_file(out / "traces.jsonl", table.traces_jsonl());

  std::ostringstream overhead;
  overhead << "countermeasure,lookups,round_trips,bytes_on_wire,cache_hits,handshakes,auth_failures,timeouts\n";
  for (const auto &mode : cfg.modes)
  {
    countermeasures::OverheadScenario os;
    os.mode = mode;
    os.seed = cfg.seed;
    os.work_dir = out / "overhead";
    auto m = countermeasures::measure_overhead(os);
    overhead << mode.name() << ',' << m.lookups << ',' << m.round_trips << ',' << m.bytes_on_wire << ','
             << m.cache_hits << ',' << m.handshakes << ',' << m.auth_failures << ',' << m.timeouts << "\n";
  }
  fs::remove_all(out / "overhead");
  write_file(out / "overhead.csv", overhead.str());

  std::cout << table.to_pretty() << overhead.str();
  for (const auto &c : table.cells)
    if (!c.error.empty())
      std::cerr << "cell error: " << c.error << "\n";
  return kExitOk;
}

int cmd_hunt(const Options &o)
{
  if (o.corpus.empty())
    throw UsageError("--corpus is required");
  hunter::SearchConfig cfg;
  std::string deletion_zone = "avts.mcafee.com";
  if (!o.config.empty())
  {
    cfg = hunter::SearchConfig::load(o.config);
    std::ifstream in(o.config);
    auto j = nlohmann::json::parse(in);
    deletion_zone = j.value("deletion_zone", deletion_zone);
  }
  const auto out = out_dir(o);

  hunter::IngestStats stats;
  auto records = hunter::ingest_logs(o.corpus, &stats);
  hunter::Aggregator agg(cfg.suffix_list ? hunter::SuffixList::load(*cfg.suffix_list)
                                         : hunter::SuffixList::builtin());
  for (const auto &r : records)
    agg.add(r);
  auto suspects = hunter::search_dnsaml(agg, cfg);
  std::vector<std::string> zones;
  for (const auto &z : suspects)
    zones.push_back(z.zone);
  auto prev = hunter::prevalence(agg, zones);
  auto deletions = hunter::deletion_rate(records, deletion_zone);

  write_file(out / "suspects.csv", hunter::suspects_csv(suspects));
  write_file(out / "metrics.csv", hunter::prevalence_csv(prev));
  write_file(out / "deletions.csv", hunter::deletions_csv(deletions));

  std::cout << stats.records << " records (" << stats.malformed << " malformed) over " << agg.days().size()
            << " days, " << agg.zones().size() << " registered zones\n";
  std::cout << hunter::suspects_csv(suspects);
  return kExitOk;
}

int cmd_gen_logs(const Options &o)
{
  std::uint64_t seed = o.seed.value_or(1);
  std::size_t records = 1000000, noise = 54, days = 10;
  bool gzip = false;
  std::string first_day = hunter::CorpusSpec{}.first_day;
  hunter::CorpusSpec spec;
  bool explicit_zones = false;
  if (!o.config.empty())
  {
    std::ifstream in(o.config);
    if (!in)
      throw UsageError("cannot read " + o.config);
    auto j = nlohmann::json::parse(in);
    records = j.value("records", records);
    noise = j.value("noise_zones", noise);
    days = j.value("days", days);
    gzip = j.value("gzip", gzip);
    first_day = j.value("first_day", first_day);
    if (!o.seed)
      seed = j.value("seed", seed);
    if (j.contains("zones"))
    {
      explicit_zones = true;
      spec.seed = seed;
      spec.days = days;
      for (const auto &z : j["zones"])
      {
        hunter::ZoneSpec zs;
        zs.suffix = z.at("suffix").get<std::string>();
        zs.queries_per_day = z.at("queries_per_day").get<std::uint64_t>();
        zs.clients = z.value("clients", zs.clients);
        zs.countries = z.value("countries", zs.countries);
        zs.some_unknown_country = z.value("some_unknown_country", false);
        auto st = z.value("structure", std::string("plain"));
        zs.structure = st == "ipv4" ? hunter::Structure::Ipv4
                       : st == "hash" ? hunter::Structure::Hash
                                      : hunter::Structure::Plain;
        zs.structured_fraction = z.value("structured_fraction", 1.0);
        zs.signature_pool = z.value("signature_pool", std::size_t{0});
        zs.categorized = z.value("categorized", false);
        zs.planted = z.value("planted", false);
        zs.answer = z.value("answer", zs.answer);
        zs.deletion_fraction = z.value("deletion_fraction", 0.0);
        spec.zones.push_back(std::move(zs));
      }
    }
  }
  if (!explicit_zones)
    spec = hunter::CorpusSpec::standard(seed, records, noise, days);
  spec.first_day = first_day;
  const auto out = out_dir(o);
  auto corpus = hunter::generate_corpus(spec);
  hunter::write_corpus(corpus, out, gzip);
  std::cout << corpus.records.size() << " records for " << spec.zones.size() << " zones written to "
            << out.string() << "\n";
  return kExitOk;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"DNSAML laboratory: lookup services, agents, adversaries and the log hunter"};
  app.require_subcommand(1);
  Options o;

  auto scenario_opts = [&](CLI::App *sub) {
    sub->add_option("--scenario", o.scenario, "Scenario JSON file");
    sub->add_option("--dialect", o.dialect, "mhr | malwaredb | gti, when no scenario file is given");
    sub->add_option("--registry", o.registry, "Registry JSONL overriding the scenario's");
    sub->add_option("--seed", o.seed, "Seed overriding the scenario's");
    sub->add_option("--out", o.out, "Output directory (default $DNSAML_LAB_OUT or ./dnsaml-out)");
  };

  auto *serve = app.add_subcommand("serve", "Run a lookup service over UDP");
  scenario_opts(serve);
  serve->add_option("--bind", o.bind, "host:port (port 0 picks one)");

  auto *scan = app.add_subcommand("scan", "Scan the scenario sandbox with an agent");
  scenario_opts(scan);
  scan->add_option("--bind", o.bind, "Query a running service at host:port instead of in-process");

  auto *attack = app.add_subcommand("attack", "Scan with the scenario's adversary on the path");
  scenario_opts(attack);

  auto *validate = app.add_subcommand("validate", "Run one attack validation");
  validate->add_option("attack", o.attack, "att-id | att-fa | att-s")->required();
  scenario_opts(validate);
  validate->add_option("--expect", o.expect, "true | false; exit 1 when the result differs");

  auto *matrix = app.add_subcommand("matrix", "Vulnerability grid over dialects and countermeasures");
  matrix->add_option("--config", o.config, "Matrix JSON (modes, archetypes, dialects, attacks)");
  matrix->add_option("--seed", o.seed, "Seed");
  matrix->add_option("--out", o.out, "Output directory");

  auto *hunt = app.add_subcommand("hunt", "Search DNS logs for lookup services");
  hunt->add_option("--corpus", o.corpus, "CSV or JSONL log file, optionally gzipped")->required();
  hunt->add_option("--config", o.config, "Search config JSON");
  hunt->add_option("--out", o.out, "Output directory");

  auto *gen = app.add_subcommand("gen-logs", "Generate a synthetic log corpus with ground truth");
  gen->add_option("--config", o.config, "Corpus spec JSON");
  gen->add_option("--seed", o.seed, "Seed");
  gen->add_option("--out", o.out, "Output directory");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  o.bind_given = scan->get_option("--bind")->count() > 0;

  try
  {
    if (*serve)
      return cmd_serve(o);
    if (*scan)
      return run_scan(o, false);
    if (*attack)
      return run_scan(o, true);
    if (*validate)
      return cmd_validate(o);
    if (*matrix)
      return cmd_matrix(o);
    if (*hunt)
      return cmd_hunt(o);
    if (*gen)
      return cmd_gen_logs(o);
  }
  catch (const UsageError &e)
  {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (const scenario::ScenarioError &e)
  {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }
  catch (const hunter::MissingCategoryList &e)
  {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }
  catch (const std::invalid_argument &e)
  {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
