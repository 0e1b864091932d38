#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "doctest.h"
#include "market/error.hpp"
#include "market/pricing.hpp"

using namespace market;
using namespace market::pricing;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

// Exact rational oracle: round_half_up(0.75 * mean(first min(10, n))).
std::optional<Money> oracle(const std::vector<Money>& prices) {
  const std::size_t m = std::min<std::size_t>(prices.size(), 10);
  if (m == 0) return std::nullopt;
  cpp_rational sum = 0;
  for (std::size_t i = 0; i < m; ++i) sum += prices[i];
  const cpp_rational shifted = cpp_rational(3, 4) * sum / m + cpp_rational(1, 2);
  const cpp_int floor = boost::multiprecision::numerator(shifted) / boost::multiprecision::denominator(shifted);
  return static_cast<Money>(floor);
}

std::vector<ComparableQuote> quotes(const std::vector<Money>& prices) {
  std::vector<ComparableQuote> out;
  for (auto p : prices) out.push_back({"q", p});
  return out;
}

}  // namespace

TEST_CASE("compute_ideal fixed examples") {
  const auto ten = compute_ideal(quotes(std::vector<Money>(10, 1000)));
  CHECK(ten == IdealPrice{750, 10});
  const std::vector<Money> seq{500, 700, 900, 1100, 1300, 1500, 1700, 1900, 2100, 2300};
  CHECK(compute_ideal(quotes(seq)) == IdealPrice{1050, 10});
  CHECK_FALSE(compute_ideal(quotes({})));
}

TEST_CASE("compute_ideal rounds half up") {
  CHECK(compute_ideal(quotes({2}))->value == 2);        // 1.5
  CHECK(compute_ideal(quotes({6}))->value == 5);        // 4.5
  CHECK(compute_ideal(quotes({1}))->value == 1);        // 0.75
  CHECK(compute_ideal(quotes({3}))->value == 2);        // 2.25
  CHECK(compute_ideal(quotes({1, 2}))->value == 1);     // 1.125
  CHECK(compute_ideal(quotes({2, 2, 2, 2}))->value == 2);
}

TEST_CASE("only the first ten quotes count") {
  std::vector<Money> p(10, 100);
  p.push_back(1'000'000);
  p.push_back(1'000'000);
  CHECK(compute_ideal(quotes(p)) == IdealPrice{75, 10});
  CHECK(compute_ideal(std::span<const Money>(p)) == IdealPrice{75, 10});
}

TEST_CASE("large prices do not overflow") {
  const std::vector<Money> big(10, 900'000'000'000'000'000);
  CHECK(compute_ideal(quotes(big))->value == *oracle(big));
}

TEST_CASE("compute_ideal agrees with the rational oracle on random lists") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    std::vector<Money> p(rng() % 26);
    for (auto& x : p) x = 1 + static_cast<Money>(rng() % 1'000'000);
    const auto got = compute_ideal(quotes(p));
    const auto want = oracle(p);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->value == *want);
      CHECK(got->sample_size == static_cast<int>(std::min<std::size_t>(p.size(), 10)));
    }
  }
}

TEST_CASE("raising any quote never lowers the ideal") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    std::vector<Money> p(1 + rng() % 10);
    for (auto& x : p) x = 1 + static_cast<Money>(rng() % 100'000);
    const auto before = compute_ideal(quotes(p))->value;
    p[rng() % p.size()] += 1 + static_cast<Money>(rng() % 1000);
    CHECK(compute_ideal(quotes(p))->value >= before);
  }
}

TEST_CASE("scaling quotes scales the ideal within one unit") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    std::vector<Money> p(1 + rng() % 10);
    for (auto& x : p) x = 1 + static_cast<Money>(rng() % 100'000);
    const Money k = 1 + static_cast<Money>(rng() % 50);
    auto scaled = p;
    for (auto& x : scaled) x *= k;
    const auto a = compute_ideal(quotes(p))->value;
    const auto b = compute_ideal(quotes(scaled))->value;
    CHECK(std::llabs(b - k * a) <= k);
  }
}

TEST_CASE("evaluate_listing_price") {
  const IdealPrice ideal{750, 10};
  CHECK(evaluate_listing_price(700, ideal) == PriceAward::Economical);
  CHECK(evaluate_listing_price(750, ideal) == PriceAward::Economical);
  CHECK(evaluate_listing_price(751, ideal) == PriceAward::NotEconomical);
  CHECK(evaluate_listing_price(800, ideal) == PriceAward::NotEconomical);
  CHECK(evaluate_listing_price(800, std::nullopt) == PriceAward::NoData);
  for (Money p = 0; p < 2000; ++p) {
    const bool economical = evaluate_listing_price(p, ideal) == PriceAward::Economical;
    const bool next = evaluate_listing_price(p + 1, ideal) == PriceAward::Economical;
    CHECK((economical || !next));
  }
  for (auto a : {PriceAward::Economical, PriceAward::NotEconomical, PriceAward::NoData}) {
    CHECK(parse_price_award(to_string(a)) == a);
  }
}

TEST_CASE("fetch_comparables truncates and degrades") {
  MockPriceSource src;
  std::vector<ComparableQuote> twelve;
  for (int i = 0; i < 12; ++i) twelve.push_back({"t" + std::to_string(i), 100 + i});
  src.set("twelve", twelve);
  src.set("three", {{"a", 1}, {"b", 2}, {"c", 3}});
  src.fail_on("broken");

  const auto t = fetch_comparables("twelve", src);
  REQUIRE(t.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(t[i].price == 100 + i);
  CHECK(fetch_comparables("three", src).size() == 3);
  CHECK(fetch_comparables("broken", src).empty());
  CHECK(fetch_comparables("unknown", src).empty());
  const auto calls = src.calls();
  CHECK(fetch_comparables("", src).empty());
  CHECK(src.calls() == calls);
}

TEST_CASE("price fixtures") {
  const auto src = MockPriceSource::load(std::string(MARKET_DATA_DIR_SRC) + "/price_fixture.json");
  CHECK(compute_ideal(src->search("Casio FX-991ES Calculator")) == IdealPrice{750, 10});
  CHECK(compute_ideal(src->search("TI-84 Plus Graphing Calculator")) == IdealPrice{1050, 10});
  CHECK_THROWS_AS(MockPriceSource(nlohmann::json::array()), Error);
  CHECK_THROWS_AS(MockPriceSource(nlohmann::json{{"x", {{{"price", 0}}}}}), Error);
  CHECK_THROWS_AS(MockPriceSource(nlohmann::json{{"x", {{{"title", "no price"}}}}}), Error);
  CHECK_THROWS_AS(MockPriceSource::load("/nonexistent.json"), Error);
}
