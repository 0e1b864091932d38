#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "market/cli.hpp"
#include "support.hpp"

using namespace market;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "market");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Config under a temp dir pointing at the shipped data files.
struct Sandbox {
  testing::TempDir dir;
  fs::path config = dir.path() / "market.json";

  explicit Sandbox(const std::string& bind = "127.0.0.1:0") {
    const fs::path data(MARKET_DATA_DIR_SRC);
    Json j = Json::parse(slurp(data / "market.json"));
    j["blacklist_path"] = (data / "blacklist.txt").string();
    j["classifier"]["fixture_path"] = (data / "compliance_corpus.jsonl").string();
    j["classifier"]["system_prompt_path"] = (data / "compliance_prompt_v1.txt").string();
    j["price_source"]["fixture_path"] = (data / "price_fixture.json").string();
    j["data_dir"] = (dir.path() / "store").string();
    j["bind_address"] = bind;
    j["password_hash_iterations"] = 1;
    std::ofstream(config) << j.dump(2);
  }

  fs::path write(const std::string& name, const std::string& content) const {
    const auto p = dir.path() / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }
};

}  // namespace

TEST_CASE("check-corpus passes the shipped corpus") {
  Sandbox s;
  const auto r = run({"check-corpus", "--config", s.config.string()});
  CHECK(r.code == 0);
  const auto report = Json::parse(r.out);
  CHECK(report["total"] == 30);
  CHECK(report["passed"] == 30);
  CHECK(report["failed"] == 0);
  CHECK(report["failures"].empty());
  for (const auto& res : report["results"]) {
    if (res["fixtureId"].get<std::string>().rfind("bl-", 0) == 0) CHECK(res["classifierCalls"] == 0);
  }
  CHECK(r.err.find("30/30") != std::string::npos);
}

TEST_CASE("check-corpus reports a flipped expectation") {
  Sandbox s;
  auto lines = slurp(fs::path(MARKET_DATA_DIR_SRC) / "compliance_corpus.jsonl");
  std::istringstream in(lines);
  std::string out, line;
  bool flipped = false;
  while (std::getline(in, line)) {
    if (!flipped && line.find("\"ok-") != std::string::npos) {
      auto j = Json::parse(line);
      j["expect_compliant"] = false;
      line = j.dump();
      flipped = true;
    }
    out += line + "\n";
  }
  REQUIRE(flipped);
  const auto corpus = s.write("flipped.jsonl", out);
  const auto r = run({"check-corpus", "--config", s.config.string(), "--corpus", corpus.string()});
  CHECK(r.code == 1);
  const auto report = Json::parse(r.out);
  CHECK(report["failed"] == 1);
  REQUIRE(report["failures"].size() == 1);
  CHECK(report["failures"][0]["expected"] == "non-compliant");
  CHECK(report["failures"][0]["actual"] == "compliant");
}

TEST_CASE("check-corpus names the malformed line") {
  Sandbox s;
  std::string text;
  std::ifstream in(fs::path(MARKET_DATA_DIR_SRC) / "compliance_corpus.jsonl");
  std::string line;
  for (int i = 1; std::getline(in, line) && i <= 10; ++i) text += (i == 7 ? std::string("{\"id\": 3") : line) + "\n";
  const auto corpus = s.write("broken.jsonl", text);
  const auto r = run({"check-corpus", "--config", s.config.string(), "--corpus", corpus.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("corpus line 7") != std::string::npos);
}

TEST_CASE("seed upserts categories") {
  Sandbox s;
  const auto file = s.write("cats.txt", "Books\nCalculator\n\n  Laptop  \nLab Equipment\n");
  auto r = run({"seed", "--config", s.config.string(), file.string()});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out) == Json{{"added", 4}, {"total", 4}});
  r = run({"seed", "--config", s.config.string(), "--file", file.string()});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out) == Json{{"added", 0}, {"total", 4}});

  const auto empty = s.write("empty.txt", "");
  r = run({"seed", "--config", s.config.string(), empty.string()});
  CHECK(r.code == 0);
  CHECK(Json::parse(r.out)["added"] == 0);

  r = run({"seed", "--config", s.config.string(), (s.dir.path() / "missing.txt").string()});
  CHECK(r.code == 1);

  auto config = Config::load(s.config);
  App app(config);
  std::vector<std::string> names;
  for (const auto& c : app.catalog().list_categories()) names.push_back(c.name);
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"Books", "Calculator", "Lab Equipment", "Laptop"});
}

TEST_CASE("promote-admin") {
  Sandbox s;
  {
    auto config = Config::load(s.config);
    App app(config);
    app.auth().register_begin({"Ada", "ada@campus.edu", "555", "C1", "password-123"});
    app.auth().verify_otp("ada@campus.edu", extract_otp(app.capture_mailer()->last_to("ada@campus.edu")->body).value());
  }
  auto r = run({"promote-admin", "--config", s.config.string(), "--email", "ada@campus.edu"});
  CHECK(r.code == 0);
  CHECK(Json::parse(r.out)["role"] == 1);
  r = run({"promote-admin", "--config", s.config.string(), "--email", "ada@campus.edu"});
  CHECK(r.code == 0);
  CHECK(Json::parse(r.out)["role"] == 1);
  {
    App app(Config::load(s.config));
    CHECK(app.auth().find_by_email("ada@campus.edu")->role == auth::kRoleAdmin);
  }
  r = run({"promote-admin", "--config", s.config.string(), "--email", "ghost@campus.edu"});
  CHECK(r.code == 1);
}

TEST_CASE("bad invocations exit non-zero") {
  CHECK(run({"serve", "--config", "/nonexistent.json"}).code == 1);
  CHECK(run({"seed"}).code != 0);
  CHECK(run({"frobnicate"}).code != 0);
  CHECK(run({}).code != 0);
  const auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(std::string(kVersion)) != std::string::npos);
  Sandbox s("not-an-address");
  CHECK(run({"serve", "--config", s.config.string()}).code == 1);
}

TEST_CASE("serve binary: healthz, occupied port and shutdown") {
  Sandbox s;
  const auto out = s.dir.path() / "serve.out";
  const auto err = s.dir.path() / "serve.err";
  const auto pidfile = s.dir.path() / "serve.pid";
  const std::string cmd = std::string("'") + MARKET_BIN + "' serve --config '" + s.config.string() + "' >'" +
                          out.string() + "' 2>'" + err.string() + "' & echo $! >'" + pidfile.string() + "'";
  REQUIRE(std::system(cmd.c_str()) == 0);

  int port = 0;
  for (int i = 0; i < 100 && port == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    const auto text = slurp(out);
    if (const auto p = text.find("listening on 127.0.0.1:"); p != std::string::npos) {
      port = std::stoi(text.substr(p + 23));
    }
  }
  REQUIRE(port > 0);
  const pid_t pid = std::stoi(slurp(pidfile));

  httplib::Client cli("127.0.0.1", port);
  const auto res = cli.Get("/healthz");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body)["status"] == "ok");

  Sandbox taken("127.0.0.1:" + std::to_string(port));
  const std::string second = std::string("'") + MARKET_BIN + "' serve --config '" + taken.config.string() +
                             "' >/dev/null 2>&1";
  const int status = std::system(second.c_str());
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);

  ::kill(pid, SIGTERM);
  bool stopped = false;
  for (int i = 0; i < 100 && !stopped; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    stopped = slurp(err).find("shutting down") != std::string::npos;
  }
  CHECK(stopped);
}
