#include <barrier>
#include <random>
#include <thread>

#include "doctest.h"
#include "market/error.hpp"
#include "support.hpp"

using namespace market;
using market::testing::TestUser;
using market::testing::World;
using transactions::Outcome;
using transactions::RequestState;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::ValidationFailed;
}

struct Market {
  World w;
  TestUser seller = w.register_user("Sam", "sam@campus.edu");
  TestUser buyer = w.register_user("Bea", "bea@campus.edu");
  TestUser other = w.register_user("Oli", "oli@campus.edu");

  Market() { w.prices.set("Casio Calculator", std::vector<pricing::ComparableQuote>(10, {"q", 1000})); }
  catalog::ProductListing listing(pricing::Money price = 700) { return w.list(seller, "Casio Calculator", price); }
  transactions::Transactions& tx() { return w.app->transactions(); }
};

}  // namespace

TEST_CASE("request exchanges contacts and reserves the product") {
  Market m;
  const auto l = m.listing();
  const auto [req, contacts] = m.tx().request_product(m.buyer.claims, l.id);
  CHECK(req.state == RequestState::Requested);
  CHECK(req.buyer_id == m.buyer.account.id);
  CHECK(req.seller_id == m.seller.account.id);
  CHECK_FALSE(req.resolved_at);
  CHECK(contacts.seller.email == "sam@campus.edu");
  CHECK(contacts.buyer.email == "bea@campus.edu");
  CHECK(contacts.seller.phone == "555-0100");
  const auto detail = m.w.app->catalog().get_listing(l.id);
  CHECK(detail.listing.status == catalog::ListingStatus::Reserved);
  CHECK(detail.listing.active_request == req.id);
}

TEST_CASE("request errors") {
  Market m;
  const auto l = m.listing();
  CHECK(code_of([&] { m.tx().request_product(m.seller.claims, l.id); }) == ErrorCode::SelfRequestForbidden);
  CHECK(code_of([&] { m.tx().request_product(m.buyer.claims, "missing"); }) == ErrorCode::NotFound);
  m.tx().request_product(m.buyer.claims, l.id);
  CHECK(code_of([&] { m.tx().request_product(m.other.claims, l.id); }) == ErrorCode::AlreadyReserved);
  CHECK(code_of([&] { m.tx().request_product(m.buyer.claims, l.id); }) == ErrorCode::AlreadyReserved);
}

TEST_CASE("sold removes the product and settles pending points") {
  Market m;
  const auto l = m.listing();
  const auto [req, contacts] = m.tx().request_product(m.buyer.claims, l.id);
  const auto sold = m.tx().resolve(m.seller.claims, req.id, Outcome::Sold);
  CHECK(sold.state == RequestState::Sold);
  CHECK(sold.resolved_at);
  CHECK_FALSE(m.w.store->get(store::collections::kProducts, l.id));
  CHECK(m.w.app->ledger().credited(m.seller.account.id) == 125);
  CHECK(m.w.app->ledger().credited(m.buyer.account.id) == 100);
  CHECK(code_of([&] { m.tx().resolve(m.seller.claims, req.id, Outcome::Sold); }) == ErrorCode::AlreadyResolved);
  CHECK(m.tx().pending_prompts(m.seller.claims).empty());
}

TEST_CASE("declined returns the product to the pool and keeps its points pending") {
  Market m;
  const auto l = m.listing();
  const auto [req, contacts] = m.tx().request_product(m.buyer.claims, l.id);
  CHECK(m.tx().resolve(m.seller.claims, req.id, Outcome::Declined).state == RequestState::Declined);
  const auto hits = m.w.app->catalog().search({"calculator", {}, {}, {}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].id == l.id);
  CHECK(m.w.app->ledger().account(m.seller.account.id)->pending.at(l.id).size() == 2);
  CHECK(m.tx().my_requests(m.buyer.claims)[0].state == RequestState::Declined);

  const auto [again, c2] = m.tx().request_product(m.other.claims, l.id);
  m.tx().resolve(m.seller.claims, again.id, Outcome::Sold);
  CHECK(m.w.app->ledger().credited(m.seller.account.id) == 125);
}

TEST_CASE("pending then sold is legal and pending is idempotent") {
  Market m;
  const auto l = m.listing();
  const auto [req, contacts] = m.tx().request_product(m.buyer.claims, l.id);
  CHECK(m.tx().resolve(m.seller.claims, req.id, Outcome::Pending).state == RequestState::Pending);
  const auto before = m.tx().find(req.id)->version;
  CHECK(m.tx().resolve(m.seller.claims, req.id, Outcome::Pending).state == RequestState::Pending);
  CHECK(m.tx().find(req.id)->version == before);
  CHECK(m.tx().pending_prompts(m.seller.claims).size() == 1);
  CHECK(m.tx().resolve(m.seller.claims, req.id, Outcome::Sold).state == RequestState::Sold);
}

TEST_CASE("only the seller resolves") {
  Market m;
  const auto l = m.listing();
  const auto [req, contacts] = m.tx().request_product(m.buyer.claims, l.id);
  CHECK(code_of([&] { m.tx().resolve(m.buyer.claims, req.id, Outcome::Sold); }) == ErrorCode::Unauthorized);
  CHECK(code_of([&] { m.tx().resolve(m.seller.claims, "missing", Outcome::Sold); }) == ErrorCode::NotFound);
  CHECK(m.tx().find(req.id)->state == RequestState::Requested);
}

TEST_CASE("prompts and my_requests") {
  Market m;
  CHECK(m.tx().my_requests(m.buyer.claims).empty());
  const auto l = m.listing();
  const auto [req, contacts] = m.tx().request_product(m.buyer.claims, l.id);
  const auto prompts = m.tx().pending_prompts(m.seller.claims);
  REQUIRE(prompts.size() == 1);
  CHECK(prompts[0].product_summary()["name"] == "Casio Calculator");
  CHECK(m.tx().pending_prompts(m.buyer.claims).empty());
  const auto mine = m.tx().my_requests(m.buyer.claims);
  REQUIRE(mine.size() == 1);
  CHECK(mine[0].state == RequestState::Requested);
  CHECK(m.tx().my_requests(m.other.claims).empty());

  m.w.clock.advance_seconds(5);
  const auto l2 = m.listing(900);
  const auto [req2, c2] = m.tx().request_product(m.other.claims, l2.id);
  const auto both = m.tx().pending_prompts(m.seller.claims);
  REQUIRE(both.size() == 2);
  CHECK(both[0].id == req2.id);
}

TEST_CASE("outcome parsing and terminal states") {
  CHECK(transactions::parse_outcome("sold") == Outcome::Sold);
  CHECK(transactions::parse_outcome("pending") == Outcome::Pending);
  CHECK(transactions::parse_outcome("declined") == Outcome::Declined);
  CHECK_FALSE(transactions::parse_outcome("Sold"));
  CHECK(transactions::is_terminal(RequestState::Sold));
  CHECK(transactions::is_terminal(RequestState::Declined));
  CHECK_FALSE(transactions::is_terminal(RequestState::Pending));
}

TEST_CASE("concurrent requests: exactly one wins") {
  for (int rep = 0; rep < 3; ++rep) {
    World w(static_cast<std::uint64_t>(rep));
    const auto seller = w.register_user("Sam", "sam@campus.edu");
    std::vector<TestUser> buyers;
    for (int i = 0; i < 32; ++i) buyers.push_back(w.register_user("B", "b" + std::to_string(i) + "@campus.edu"));
    const auto l = w.list(seller, "Lamp", 10);
    std::atomic<int> wins{0}, reserved{0};
    std::barrier start(static_cast<std::ptrdiff_t>(buyers.size()));
    std::vector<std::thread> threads;
    for (auto& b : buyers) {
      threads.emplace_back([&] {
        start.arrive_and_wait();
        try {
          w.app->transactions().request_product(b.claims, l.id);
          wins.fetch_add(1);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::AlreadyReserved) reserved.fetch_add(1);
        }
      });
    }
    for (auto& t : threads) t.join();
    CHECK(wins.load() == 1);
    CHECK(reserved.load() == 31);
  }
}

TEST_CASE("pool conservation and single settlement under random interleavings") {
  std::mt19937_64 rng(17);
  World w;
  const auto seller = w.register_user("Sam", "sam@campus.edu");
  std::vector<TestUser> buyers{w.register_user("A", "a@campus.edu"), w.register_user("B", "b@campus.edu")};
  std::vector<std::string> products;
  for (int i = 0; i < 6; ++i) products.push_back(w.list(seller, "Item " + std::to_string(i), 10).id);
  auto& tx = w.app->transactions();
  for (int step = 0; step < 400; ++step) {
    const auto& pid = products[rng() % products.size()];
    try {
      switch (rng() % 4) {
        case 0: tx.request_product(buyers[rng() % 2].claims, pid); break;
        case 1:
        case 2: {
          auto prompts = tx.pending_prompts(seller.claims);
          if (prompts.empty()) break;
          const auto& r = prompts[rng() % prompts.size()];
          tx.resolve(seller.claims, r.id, static_cast<Outcome>(rng() % 3));
          break;
        }
        case 3: w.app->catalog().delete_listing(seller.claims, pid); break;
      }
    } catch (const Error&) {
    }
    for (const auto& p : products) {
      const auto doc = w.store->get(store::collections::kProducts, p);
      store::Query open;
      open.where = [&](const store::Json& b) {
        return b["productId"] == p && (b["state"] == "Requested" || b["state"] == "Pending");
      };
      const auto open_requests = w.store->query(store::collections::kRequests, open).size();
      if (!doc) {
        CHECK(open_requests == 0);
      } else if (doc->body["status"] == "Reserved") {
        CHECK(open_requests == 1);
      } else {
        CHECK(doc->body["status"] == "Listed");
        CHECK(open_requests == 0);
      }
    }
  }
  std::map<std::string, int> settles;
  for (const auto& e : w.app->ledger().events(seller.account.id)) {
    if (e.op == reputation::LedgerOp::Settle) ++settles[e.listing_id];
  }
  store::Query sold;
  sold.where = [](const store::Json& b) { return b["state"] == "Sold"; };
  std::map<std::string, int> sold_count;
  for (const auto& d : w.store->query(store::collections::kRequests, sold)) ++sold_count[d.body["productId"]];
  CHECK(settles == sold_count);
  for (const auto& [p, n] : settles) CHECK(n == 1);
}
