#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "market/auth.hpp"
#include "market/clock.hpp"
#include "market/compliance.hpp"
#include "market/pricing.hpp"
#include "market/reputation.hpp"
#include "market/store.hpp"

namespace market::catalog {

using pricing::Money;

inline constexpr std::size_t kMaxNameLength = 120;
inline constexpr std::size_t kMaxDescriptionLength = 2000;
inline constexpr std::size_t kMaxPhotoBytes = 2 * 1024 * 1024;
inline constexpr std::string_view kMediaJpeg = "image/jpeg";
inline constexpr std::string_view kMediaPng = "image/png";

// Withdrawn is the short-lived state a listing passes through while its
// owner deletes it; it is never searchable or requestable.
enum class ListingStatus { Listed, Reserved, Withdrawn };

std::string_view to_string(ListingStatus status) noexcept;
std::optional<ListingStatus> parse_listing_status(std::string_view name) noexcept;

struct Category {
  std::string id;
  std::string name;
};

struct PhotoRef {
  std::string blob;  // sha256 key in the blob store
  std::string media_type;
  std::size_t size = 0;
};

struct ProductListing {
  std::string id;
  std::string name;
  std::string description;
  Money price = 0;
  std::string seller_id;
  std::string category_id;
  int quantity = 1;  // informational; sale removes the whole listing
  std::optional<PhotoRef> photo;
  bool shipping = false;  // stored only
  ListingStatus status = ListingStatus::Listed;
  pricing::PriceAward price_award = pricing::PriceAward::NoData;
  std::optional<pricing::IdealPrice> ideal_price;
  std::vector<Money> comparables;  // prices the award was computed from
  std::optional<std::string> active_request;
  Timestamp created_at = 0;
  Timestamp updated_at = 0;
  std::uint64_t version = 0;

  store::Json to_json() const;
  static ProductListing from_document(const store::Document& doc);
};

struct ListingDraft {
  std::string name;
  std::string description;
  Money price = 0;
  std::string category_id;
  int quantity = 1;
  bool shipping = false;
  std::optional<compliance::Photo> photo;
};

struct SellerProfile {
  std::string id;
  std::string name;
  reputation::Points points = 0;
};

struct ListingSummary {
  std::string id;
  std::string name;
  Money price = 0;
  std::string category_id;
  std::string seller_id;
  std::string seller_name;
  reputation::Points seller_points = 0;
  Timestamp created_at = 0;
  int relevance = 0;
  double score = 0.0;

  store::Json to_json() const;
};

struct ListingDetail {
  ProductListing listing;
  SellerProfile seller;

  store::Json to_json() const;
};

struct SearchQuery {
  std::string text;
  std::optional<std::string> category_id;
  std::optional<Money> min_price;
  std::optional<Money> max_price;
};

// Lowercased whitespace-separated query tokens.
std::vector<std::string> query_tokens(std::string_view query);
// Every token is a case-insensitive substring of name + " " + description.
bool matches(const std::vector<std::string>& tokens, std::string_view name, std::string_view description);
// 2 per token found in the name plus 1 per token found in the description;
// 1 for an empty query.
int relevance(const std::vector<std::string>& tokens, std::string_view name, std::string_view description);

class Catalog {
 public:
  Catalog(store::DocumentStore& store, reputation::Ledger& ledger, const auth::AuthService& auth,
          const compliance::BlacklistConfig& blacklist, compliance::ClassifierClient& classifier,
          pricing::PriceSourceClient& price_source, const Clock& clock,
          compliance::ClassifierSettings classifier_settings);

  // Idempotent upsert by name.
  std::vector<Category> seed_categories(const std::vector<std::string>& names);
  std::vector<Category> list_categories() const;
  std::optional<Category> find_category(std::string_view id) const;

  // validate -> compliance -> pricing -> reputation accrual -> persist.
  ProductListing create_listing(const auth::Claims& seller, const ListingDraft& draft);
  // Ranked by relevance x seller boost, then newest first.
  std::vector<ListingSummary> search(const SearchQuery& query) const;
  ListingDetail get_listing(std::string_view id) const;
  void delete_listing(const auth::Claims& seller, std::string_view id);
  compliance::Photo photo(std::string_view id) const;

 private:
  SellerProfile seller_profile(const std::string& user_id) const;

  store::DocumentStore& store_;
  reputation::Ledger& ledger_;
  const auth::AuthService& auth_;
  const compliance::BlacklistConfig& blacklist_;
  compliance::ClassifierClient& classifier_;
  pricing::PriceSourceClient& price_source_;
  const Clock& clock_;
  compliance::ClassifierSettings classifier_settings_;
  std::mutex category_mutex_;
};

}  // namespace market::catalog
