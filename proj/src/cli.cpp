#include "market/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "market/api.hpp"
#include "market/app.hpp"
#include "market/config.hpp"
#include "market/error.hpp"
#include "market/text.hpp"

namespace market::cli {
namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_serve(const Config& config, std::ostream& out, std::ostream& err) {
  const auto addr = api::parse_bind_address(config.bind_address);
  if (!addr) {
    err << "invalid bind_address '" << config.bind_address << "'\n";
    return 1;
  }
  App app(config);
  api::Router router(app);
  api::HttpServer server(router, config.cors_allow_origin);
  const auto port = server.bind(addr->first, addr->second);
  if (!port) {
    err << "cannot bind " << config.bind_address << "\n";
    return 2;
  }
  g_stop.store(false);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.start();
  out << "listening on " << addr->first << ":" << *port << std::endl;
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  err << "shutting down\n";
  return 0;
}

int cmd_seed(const Config& config, const std::string& file, std::ostream& out, std::ostream& err) {
  const auto content = read_file(file);
  if (!content) {
    err << "cannot read categories file " << file << "\n";
    return 1;
  }
  std::vector<std::string> names;
  std::istringstream lines(*content);
  for (std::string line; std::getline(lines, line);) {
    const auto name = text::trim(line);
    if (!name.empty()) names.emplace_back(name);
  }
  App app(config);
  const auto before = app.catalog().list_categories().size();
  const auto after = app.catalog().seed_categories(names).size();
  out << nlohmann::json{{"added", after - before}, {"total", after}}.dump() << "\n";
  return 0;
}

int cmd_check_corpus(const Config& config, const std::string& corpus_path, std::ostream& out, std::ostream& err) {
  const std::filesystem::path path = corpus_path.empty() ? config.classifier.fixture_path : std::filesystem::path(corpus_path);
  if (path.empty()) {
    err << "no corpus given and classifier.fixture_path is unset\n";
    return 1;
  }
  std::vector<compliance::CorpusFixture> fixtures;
  try {
    fixtures = compliance::load_corpus(path);
  } catch (const std::runtime_error& e) {
    err << e.what() << "\n";
    return 1;
  }
  const auto blacklist = config.blacklist_path.empty() ? compliance::BlacklistConfig{}
                                                       : compliance::BlacklistConfig::load(config.blacklist_path);
  compliance::ClassifierSettings settings;
  settings.timeout = config.classifier.timeout;
  if (!config.classifier.system_prompt_path.empty()) {
    const auto prompt = read_file(config.classifier.system_prompt_path);
    if (!prompt) {
      err << "cannot read system prompt " << config.classifier.system_prompt_path.string() << "\n";
      return 1;
    }
    settings.system_prompt = *prompt;
  }
  const auto report = check_corpus(fixtures, blacklist, settings);
  out << report.to_json().dump(2) << "\n";
  err << report.passed << "/" << report.total << " fixtures passed\n";
  return report.failed == 0 ? 0 : 1;
}

int cmd_promote_admin(const Config& config, const std::string& email, std::ostream& out, std::ostream& err) {
  App app(config);
  try {
    const auto user = app.auth().set_role(email, auth::kRoleAdmin);
    out << nlohmann::json{{"id", user.id}, {"email", user.email}, {"role", user.role}}.dump() << "\n";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnknownAccount) throw;
    err << "unknown account " << email << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

nlohmann::json CorpusReport::to_json() const {
  auto failures_json = nlohmann::json::array();
  for (const auto& f : failures) {
    failures_json.push_back({{"fixtureId", f.fixture_id},
                             {"expected", f.expected ? "compliant" : "non-compliant"},
                             {"actual", f.actual ? "compliant" : "non-compliant"},
                             {"reason", f.reason}});
  }
  auto results_json = nlohmann::json::array();
  for (const auto& r : results) {
    results_json.push_back(
        {{"fixtureId", r.fixture_id}, {"compliant", r.compliant}, {"classifierCalls", r.classifier_calls}});
  }
  return {{"total", total}, {"passed", passed}, {"failed", failed}, {"failures", failures_json}, {"results", results_json}};
}

CorpusReport check_corpus(const std::vector<compliance::CorpusFixture>& fixtures,
                          const compliance::BlacklistConfig& blacklist, const compliance::ClassifierSettings& settings) {
  compliance::MockClassifier mock;
  compliance::register_fixtures(mock, fixtures);
  CorpusReport report;
  for (const auto& f : fixtures) {
    const auto verdict = compliance::check_compliance(f.request, blacklist, mock, settings);
    report.results.push_back({f.id, verdict.compliant, verdict.classifier_calls, verdict.reason});
    ++report.total;
    bool ok = verdict.compliant == f.expect_compliant;
    std::string why = ok ? "" : "verdict disagrees with expectation";
    if (ok && f.expect_reason_substring && verdict.reason.find(*f.expect_reason_substring) == std::string::npos) {
      ok = false;
      why = "reason does not contain \"" + *f.expect_reason_substring + "\"";
    }
    if (ok) {
      ++report.passed;
    } else {
      ++report.failed;
      report.failures.push_back({f.id, f.expect_compliant, verdict.compliant,
                                 why + (verdict.reason.empty() ? "" : ": " + verdict.reason)});
    }
  }
  return report;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Campus marketplace service and admin tool", "market"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path;
  std::string categories_file;
  std::string corpus_path;
  std::string email;

  auto* serve = app.add_subcommand("serve", "Run the HTTP service until SIGINT/SIGTERM");
  serve->add_option("--config", config_path, "Config file")->required();

  auto* seed = app.add_subcommand("seed", "Upsert categories from a newline-delimited file");
  seed->add_option("--config", config_path, "Config file")->required();
  seed->add_option("file,--file", categories_file, "Categories file")->required();

  auto* corpus = app.add_subcommand("check-corpus", "Run the compliance corpus and print a JSON report");
  corpus->add_option("--config", config_path, "Config file")->required();
  corpus->add_option("--corpus", corpus_path, "JSON-lines corpus (defaults to classifier.fixture_path)");

  auto* promote = app.add_subcommand("promote-admin", "Give an account the admin role");
  promote->add_option("--config", config_path, "Config file")->required();
  promote->add_option("--email", email, "Account email")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  Config config;
  try {
    config = Config::load(config_path);
  } catch (const Error& e) {
    err << "bad config: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*serve) return cmd_serve(config, out, err);
    if (*seed) return cmd_seed(config, categories_file, out, err);
    if (*corpus) return cmd_check_corpus(config, corpus_path, out, err);
    if (*promote) return cmd_promote_admin(config, email, out, err);
  } catch (const Error& e) {
    err << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace market::cli
