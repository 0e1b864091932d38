#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "market/app.hpp"
#include "market/error.hpp"
#include "support.hpp"

using namespace market;
using Json = nlohmann::json;

namespace {

Json minimal() {
  return {{"allowed_email_domains", {"campus.edu"}}, {"session_secret", "0123456789abcdef0123"}};
}

ErrorCode code_of(const Json& j) {
  try {
    Config::from_json(j, "/base");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("config was accepted");
  return ErrorCode::ValidationFailed;
}

}  // namespace

TEST_CASE("shipped config loads with the documented defaults") {
  const auto c = Config::load(std::filesystem::path(MARKET_DATA_DIR_SRC) / "market.json");
  CHECK(c.auth.allowed_email_domains == std::vector<std::string>{"campus.edu"});
  CHECK(c.auth.otp_ttl_seconds == 600);
  CHECK(c.auth.otp_max_attempts == 5);
  CHECK(c.auth.session_ttl_seconds == 86400);
  CHECK(c.reputation.initial_points == 100);
  CHECK(c.reputation.boost_alpha == doctest::Approx(0.25));
  CHECK(c.reputation.boost_cap == 500);
  CHECK(c.reputation.table.transaction_completed == 10);
  CHECK(c.reputation.table.free_listing == 20);
  CHECK(c.reputation.table.economical_listing == 15);
  CHECK(c.reputation.table.non_compliant_listing == -5);
  CHECK(c.reputation.table.tos_violation == -50);
  CHECK(c.blacklist_path == std::filesystem::path(MARKET_DATA_DIR_SRC) / "blacklist.txt");
  CHECK(c.classifier.mode == "mock");
  CHECK(c.price_source.mode == "mock");
  CHECK(c.bind_address == "127.0.0.1:8080");
  CHECK(c.cors_allow_origin == "http://localhost:5173");
  REQUIRE(c.classifier.default_response);
  CHECK(Json::parse(*c.classifier.default_response) == Json{{"compliant", true}});
}

TEST_CASE("shipped config builds a working App") {
  auto c = Config::load(std::filesystem::path(MARKET_DATA_DIR_SRC) / "market.json");
  c.data_dir.clear();
  App app(c);
  CHECK(app.capture_mailer() != nullptr);
  CHECK(app.store().healthy());
}

TEST_CASE("invalid configs are rejected") {
  CHECK_NOTHROW(Config::from_json(minimal(), "/base"));
  auto j = minimal();
  j["colour"] = "blue";
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  j = minimal();
  j["classifier"] = {{"mode", "mock"}, {"retries", 3}};
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  j = minimal();
  j.erase("allowed_email_domains");
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  j = minimal();
  j["allowed_email_domains"] = Json::array();
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  j = minimal();
  j["modifiers"] = {{"Bribery", 5}};
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  j = minimal();
  j["modifiers"] = {{"TransactionCompleted", -10}};
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  j = minimal();
  j["modifiers"] = {{"TosViolation", 50}};
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  j = minimal();
  j["modifiers"] = {{"FreeListing", "twenty"}};
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  j = minimal();
  j["otp_ttl_seconds"] = "ten";
  CHECK(code_of(j) == ErrorCode::ConfigInvalid);
  CHECK(code_of(Json::array()) == ErrorCode::ConfigInvalid);

  try {
    Config::load("/nonexistent/market.json");
    FAIL("missing file accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
  }
  testing::TempDir dir;
  std::ofstream(dir.path() / "bad.json") << "{ nope";
  try {
    Config::load(dir.path() / "bad.json");
    FAIL("bad JSON accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
  }
}

TEST_CASE("modifier overrides apply") {
  auto j = minimal();
  j["modifiers"] = {{"TransactionCompleted", 12}};
  const auto c = Config::from_json(j, "/base");
  CHECK(c.reputation.table.transaction_completed == 12);
  CHECK(c.reputation.table.free_listing == 20);
}

TEST_CASE("paths resolve against the config directory") {
  auto j = minimal();
  j["blacklist_path"] = "lists/bl.txt";
  j["data_dir"] = "/abs/data";
  j["price_source"] = {{"mode", "mock"}, {"fixture_path", "p.json"}};
  j["mail_capture_path"] = "mail.log";
  const auto c = Config::from_json(j, "/etc/market");
  CHECK(c.blacklist_path == std::filesystem::path("/etc/market/lists/bl.txt"));
  CHECK(c.data_dir == std::filesystem::path("/abs/data"));
  CHECK(c.price_source.fixture_path == std::filesystem::path("/etc/market/p.json"));
  CHECK(c.mail_capture_path == std::filesystem::path("/etc/market/mail.log"));
}

TEST_CASE("data directory falls back to the environment") {
  ::setenv(store::kDataDirEnv, "/var/lib/market", 1);
  auto c = Config::from_json(minimal(), "/base");
  CHECK(c.data_dir == std::filesystem::path("/var/lib/market"));
  auto j = minimal();
  j["data_dir"] = "/explicit";
  c = Config::from_json(j, "/base");
  CHECK(c.data_dir == std::filesystem::path("/explicit"));
  ::unsetenv(store::kDataDirEnv);
  c = Config::from_json(minimal(), "/base");
  CHECK(c.data_dir.empty());
}

TEST_CASE("App refuses adapters that do not ship") {
  auto j = minimal();
  j["classifier"] = {{"mode", "remote"}, {"endpoint", "https://example.invalid"}};
  CHECK_THROWS_AS(App(Config::from_json(j, "/base")), Error);
  j = minimal();
  j["price_source"] = {{"mode", "remote"}};
  CHECK_THROWS_AS(App(Config::from_json(j, "/base")), Error);
  j = minimal();
  j["session_secret"] = "short";
  CHECK_THROWS(App(Config::from_json(j, "/base")));
}
