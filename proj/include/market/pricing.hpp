#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace market::pricing {

// Integer minor currency units (paise).
using Money = std::int64_t;

inline constexpr std::size_t kMaxComparables = 10;
// The ideal price is three quarters of the comparables' mean.
inline constexpr Money kIdealNumerator = 3;
inline constexpr Money kIdealDenominator = 4;

struct ComparableQuote {
  std::string title;
  Money price = 0;  // > 0
};

struct IdealPrice {
  Money value = 0;
  int sample_size = 0;

  friend bool operator==(const IdealPrice&, const IdealPrice&) = default;
};

enum class PriceAward { Economical, NotEconomical, NoData };

std::string_view to_string(PriceAward award) noexcept;
std::optional<PriceAward> parse_price_award(std::string_view name) noexcept;

class PriceSourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PriceSourceClient {
 public:
  virtual ~PriceSourceClient() = default;
  // Quotes in source order. May throw PriceSourceError.
  virtual std::vector<ComparableQuote> search(std::string_view product_name) = 0;
};

// Fixture: {"<product name>": [{"title": ..., "price": ...}, ...]}.
// Unknown names yield no quotes.
class MockPriceSource final : public PriceSourceClient {
 public:
  MockPriceSource() = default;
  explicit MockPriceSource(const nlohmann::json& fixture);
  static std::unique_ptr<MockPriceSource> load(const std::filesystem::path& path);

  void set(std::string name, std::vector<ComparableQuote> quotes);
  void fail_on(std::string name);

  std::vector<ComparableQuote> search(std::string_view product_name) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::map<std::string, std::vector<ComparableQuote>, std::less<>> quotes_;
  std::map<std::string, bool, std::less<>> failing_;
  std::atomic<std::size_t> calls_{0};
};

// First ten quotes in source order; empty on any client failure.
std::vector<ComparableQuote> fetch_comparables(std::string_view product_name, PriceSourceClient& client);

// round_half_up(0.75 * mean(first min(10, n) prices)); nullopt for no quotes.
std::optional<IdealPrice> compute_ideal(std::span<const ComparableQuote> quotes);
std::optional<IdealPrice> compute_ideal(std::span<const Money> prices);

// Equality counts as economical.
PriceAward evaluate_listing_price(Money listed_price, const std::optional<IdealPrice>& ideal);

}  // namespace market::pricing
