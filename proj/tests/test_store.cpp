#include <fstream>
#include <random>
#include <thread>

#include "doctest.h"
#include "market/crypto.hpp"
#include "market/error.hpp"
#include "market/store.hpp"
#include "support.hpp"

using namespace market;
using store::Json;

TEST_CASE("put then get round trips and bumps versions") {
  auto s = store::EmbeddedStore::in_memory();
  const auto a = s->put("things", {"", {{"x", 1}}});
  CHECK(a.id.size() == 24);
  CHECK(a.version == 0);
  CHECK(s->get("things", a.id)->body == Json{{"x", 1}});
  const auto b = s->put("things", {a.id, {{"x", 2}}});
  CHECK(b.version == 1);
  CHECK(s->get("things", a.id)->body["x"] == 2);
  CHECK_FALSE(s->get("things", "nope"));
}

TEST_CASE("ids are unique and increasing") {
  auto s = store::EmbeddedStore::in_memory();
  std::string prev;
  for (int i = 0; i < 100; ++i) {
    auto id = s->new_id();
    CHECK(id > prev);
    prev = id;
  }
}

TEST_CASE("insert is create-only") {
  auto s = store::EmbeddedStore::in_memory();
  CHECK(s->insert("c", {"k", {{"v", 1}}}));
  CHECK_FALSE(s->insert("c", {"k", {{"v", 2}}}));
  CHECK(s->get("c", "k")->body["v"] == 1);
}

TEST_CASE("query filters, sorts and limits") {
  auto s = store::EmbeddedStore::in_memory();
  CHECK(s->query("products", {}).empty());
  s->put("products", {"a", {{"category", "X"}, {"createdAt", 10}}});
  s->put("products", {"b", {{"category", "Y"}, {"createdAt", 30}}});
  s->put("products", {"c", {{"category", "X"}, {"createdAt", 20}}});

  store::Query by_cat;
  by_cat.where = [](const Json& b) { return b["category"] == "X"; };
  const auto xs = s->query("products", by_cat);
  REQUIRE(xs.size() == 2);
  CHECK(xs[0].id == "a");
  CHECK(xs[1].id == "c");

  store::Query newest;
  newest.sort = store::SortSpec{"createdAt", true};
  newest.limit = 1;
  const auto n = s->query("products", newest);
  REQUIRE(n.size() == 1);
  CHECK(n[0].id == "b");
}

TEST_CASE("compare_and_set") {
  auto s = store::EmbeddedStore::in_memory();
  const auto d = s->put("c", {"k", {{"n", 0}}});
  const auto ok = s->compare_and_set("c", "k", d.version, {{"n", 1}});
  CHECK(ok.ok());
  CHECK(ok.document.version == 1);
  CHECK(s->compare_and_set("c", "k", d.version, {{"n", 2}}).status == store::CasStatus::VersionConflict);
  CHECK(s->compare_and_set("c", "missing", 0, {{"n", 2}}).status == store::CasStatus::NotFound);
  CHECK(s->get("c", "k")->body["n"] == 1);
}

TEST_CASE("remove is idempotent and a re-put starts at version 0") {
  auto s = store::EmbeddedStore::in_memory();
  s->put("c", {"k", {{"n", 0}}});
  s->put("c", {"k", {{"n", 1}}});
  s->remove("c", "k");
  CHECK_FALSE(s->get("c", "k"));
  s->remove("c", "k");
  CHECK(s->put("c", {"k", {{"n", 2}}}).version == 0);
}

TEST_CASE("collections are isolated") {
  auto s = store::EmbeddedStore::in_memory();
  s->put("a", {"k", {{"v", "a"}}});
  s->put("b", {"k", {{"v", "b"}}});
  s->remove("a", "k");
  CHECK_FALSE(s->get("a", "k"));
  CHECK(s->get("b", "k")->body["v"] == "b");
}

TEST_CASE("blobs are content addressed") {
  testing::TempDir dir;
  auto s = store::EmbeddedStore::open(dir.path());
  const std::vector<std::uint8_t> bytes{1, 2, 3, 4};
  const auto key = s->put_blob(bytes);
  CHECK(key == crypto::sha256_hex(std::span<const std::uint8_t>(bytes)));
  CHECK(s->put_blob(bytes) == key);
  CHECK(std::filesystem::exists(dir.path() / "blobs" / key));
  CHECK(s->get_blob(key).value() == bytes);
  CHECK_FALSE(s->get_blob("00"));
  CHECK_FALSE(s->get_blob("../../etc/passwd"));
}

TEST_CASE("journal survives restart with versions intact") {
  testing::TempDir dir;
  std::string id;
  {
    auto s = store::EmbeddedStore::open(dir.path());
    id = s->put("c", {"", {{"n", 0}}}).id;
    s->put("c", {id, {{"n", 1}}});
    s->put("c", {"gone", {{"n", 1}}});
    s->remove("c", "gone");
  }
  auto s = store::EmbeddedStore::open(dir.path());
  CHECK(s->get("c", id)->body["n"] == 1);
  CHECK(s->get("c", id)->version == 1);
  CHECK_FALSE(s->get("c", "gone"));
  CHECK(s->new_id() > id);
}

TEST_CASE("a torn journal tail is dropped and the store keeps working") {
  testing::TempDir dir;
  {
    auto s = store::EmbeddedStore::open(dir.path());
    s->put("c", {"a", {{"n", 1}}});
    s->put("c", {"b", {{"n", 2}}});
  }
  {
    std::ofstream out(dir.path() / "c.journal", std::ios::binary | std::ios::app);
    const char torn[] = {char(0xE8), char(0x03), 0, 0, '{', '"'};
    out.write(torn, sizeof torn);
  }
  auto s = store::EmbeddedStore::open(dir.path());
  CHECK(s->get("c", "a")->body["n"] == 1);
  CHECK(s->get("c", "b")->body["n"] == 2);
  s->put("c", {"c", {{"n", 3}}});
  s.reset();
  auto again = store::EmbeddedStore::open(dir.path());
  CHECK(again->query("c", {}).size() == 3);
}

TEST_CASE("compaction on open shrinks a journal of overwrites") {
  testing::TempDir dir;
  {
    auto s = store::EmbeddedStore::open(dir.path());
    for (int i = 0; i < 200; ++i) s->put("c", {"k", {{"n", i}}});
  }
  const auto before = std::filesystem::file_size(dir.path() / "c.journal");
  { auto s = store::EmbeddedStore::open(dir.path()); }
  const auto after = std::filesystem::file_size(dir.path() / "c.journal");
  CHECK(after < before / 50);
  auto s = store::EmbeddedStore::open(dir.path());
  CHECK(s->get("c", "k")->body["n"] == 199);
  CHECK(s->get("c", "k")->version == 199);
}

TEST_CASE("health reflects a usable data directory") {
  testing::TempDir dir;
  const auto root = dir.path() / "data";
  auto s = store::EmbeddedStore::open(root);
  CHECK(s->healthy());
  CHECK(store::EmbeddedStore::in_memory()->healthy());
  std::filesystem::remove_all(root);
  std::ofstream(root) << "not a directory";
  CHECK_FALSE(s->healthy());
  CHECK_THROWS_AS(s->put("c", {"k", {}}), Error);
}

TEST_CASE("racers from one version: exactly one CAS wins") {
  auto s = store::EmbeddedStore::in_memory();
  for (int round = 0; round < 20; ++round) {
    const auto d = s->put("c", {"k", {{"round", round}}});
    std::atomic<int> wins{0}, conflicts{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 100; ++t) {
      threads.emplace_back([&, t] {
        const auto r = s->compare_and_set("c", "k", d.version, {{"winner", t}});
        (r.ok() ? wins : conflicts).fetch_add(1);
      });
    }
    for (auto& t : threads) t.join();
    CHECK(wins.load() == 1);
    CHECK(conflicts.load() == 99);
  }
}
