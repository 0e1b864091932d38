#include "market/pricing.hpp"

#include <fstream>

#include "market/error.hpp"

namespace market::pricing {

std::string_view to_string(PriceAward award) noexcept {
  switch (award) {
    case PriceAward::Economical: return "Economical";
    case PriceAward::NotEconomical: return "NotEconomical";
    case PriceAward::NoData: return "NoData";
  }
  return "NoData";
}

std::optional<PriceAward> parse_price_award(std::string_view name) noexcept {
  for (auto a : {PriceAward::Economical, PriceAward::NotEconomical, PriceAward::NoData}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

MockPriceSource::MockPriceSource(const nlohmann::json& fixture) {
  if (!fixture.is_object()) throw Error(ErrorCode::ConfigInvalid, "price fixture must be a JSON object");
  for (const auto& [name, list] : fixture.items()) {
    if (!list.is_array()) throw Error(ErrorCode::ConfigInvalid, "price fixture entry for " + name + " must be an array");
    std::vector<ComparableQuote> quotes;
    for (const auto& q : list) {
      if (!q.is_object() || !q.contains("price") || !q.at("price").is_number_integer()) {
        throw Error(ErrorCode::ConfigInvalid, "price fixture quote for " + name + " needs an integer price");
      }
      ComparableQuote quote{q.value("title", ""), q.at("price").get<Money>()};
      if (quote.price <= 0) throw Error(ErrorCode::ConfigInvalid, "price fixture quote for " + name + " must be > 0");
      quotes.push_back(std::move(quote));
    }
    quotes_[name] = std::move(quotes);
  }
}

std::unique_ptr<MockPriceSource> MockPriceSource::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read price fixture " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigInvalid, "price fixture is not valid JSON: " + path.string());
  return std::make_unique<MockPriceSource>(j);
}

void MockPriceSource::set(std::string name, std::vector<ComparableQuote> quotes) {
  quotes_[std::move(name)] = std::move(quotes);
}

void MockPriceSource::fail_on(std::string name) { failing_[std::move(name)] = true; }

std::vector<ComparableQuote> MockPriceSource::search(std::string_view product_name) {
  calls_.fetch_add(1);
  if (failing_.contains(product_name)) throw PriceSourceError("mock price source failure");
  auto it = quotes_.find(product_name);
  if (it == quotes_.end()) return {};
  return it->second;
}

std::vector<ComparableQuote> fetch_comparables(std::string_view product_name, PriceSourceClient& client) {
  if (product_name.empty()) return {};
  std::vector<ComparableQuote> quotes;
  try {
    quotes = client.search(product_name);
  } catch (const std::exception&) {
    return {};
  }
  if (quotes.size() > kMaxComparables) quotes.resize(kMaxComparables);
  return quotes;
}

std::optional<IdealPrice> compute_ideal(std::span<const Money> prices) {
  if (prices.empty()) return std::nullopt;
  const auto n = std::min(prices.size(), kMaxComparables);
  __int128 sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += prices[i];
  // round_half_up(3 * sum / (4 * n)) == floor((2 * 3 * sum + 4 * n) / (2 * 4 * n))
  const __int128 num = 2 * kIdealNumerator * sum + kIdealDenominator * static_cast<__int128>(n);
  const __int128 den = 2 * kIdealDenominator * static_cast<__int128>(n);
  __int128 q = num / den;
  if (num % den != 0 && num < 0) --q;
  return IdealPrice{static_cast<Money>(q), static_cast<int>(n)};
}

std::optional<IdealPrice> compute_ideal(std::span<const ComparableQuote> quotes) {
  std::vector<Money> prices;
  prices.reserve(std::min(quotes.size(), kMaxComparables));
  for (std::size_t i = 0; i < quotes.size() && i < kMaxComparables; ++i) prices.push_back(quotes[i].price);
  return compute_ideal(std::span<const Money>(prices));
}

PriceAward evaluate_listing_price(Money listed_price, const std::optional<IdealPrice>& ideal) {
  if (!ideal) return PriceAward::NoData;
  return listed_price <= ideal->value ? PriceAward::Economical : PriceAward::NotEconomical;
}

}  // namespace market::pricing
