#include "market/catalog.hpp"

#include <algorithm>
#include <unordered_map>

#include "market/error.hpp"
#include "market/text.hpp"

namespace market::catalog {
namespace {

using store::Json;
constexpr auto kProducts = store::collections::kProducts;
constexpr auto kCategories = store::collections::kCategories;

void validate_text(const std::string& value, std::string_view field, std::size_t min, std::size_t max) {
  const auto len = text::utf8_length(value);
  if (!len) throw Error(ErrorCode::ValidationFailed, std::string(field) + " is not valid UTF-8", std::string(field));
  if (*len < min || *len > max) {
    throw Error(ErrorCode::ValidationFailed,
                std::string(field) + " must be " + std::to_string(min) + "-" + std::to_string(max) + " characters",
                std::string(field));
  }
}

}  // namespace

std::string_view to_string(ListingStatus status) noexcept {
  switch (status) {
    case ListingStatus::Listed: return "Listed";
    case ListingStatus::Reserved: return "Reserved";
    case ListingStatus::Withdrawn: return "Withdrawn";
  }
  return "Listed";
}

std::optional<ListingStatus> parse_listing_status(std::string_view name) noexcept {
  for (auto s : {ListingStatus::Listed, ListingStatus::Reserved, ListingStatus::Withdrawn}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

Json ProductListing::to_json() const {
  Json j = {{"name", name},
            {"description", description},
            {"price", price},
            {"userId", seller_id},
            {"category", category_id},
            {"quantity", quantity},
            {"shipping", shipping},
            {"status", to_string(status)},
            {"priceAward", pricing::to_string(price_award)},
            {"comparables", comparables},
            {"createdAt", created_at},
            {"updatedAt", updated_at}};
  j["photo"] = photo ? Json{{"blob", photo->blob}, {"mediaType", photo->media_type}, {"size", photo->size}} : Json();
  j["idealPrice"] = ideal_price ? Json{{"value", ideal_price->value}, {"sampleSize", ideal_price->sample_size}} : Json();
  j["activeRequest"] = active_request ? Json(*active_request) : Json();
  return j;
}

ProductListing ProductListing::from_document(const store::Document& doc) {
  const auto& b = doc.body;
  ProductListing p;
  p.id = doc.id;
  p.version = doc.version;
  p.name = b.at("name").get<std::string>();
  p.description = b.at("description").get<std::string>();
  p.price = b.at("price").get<Money>();
  p.seller_id = b.at("userId").get<std::string>();
  p.category_id = b.at("category").get<std::string>();
  p.quantity = b.value("quantity", 1);
  p.shipping = b.value("shipping", false);
  p.status = parse_listing_status(b.at("status").get<std::string>()).value_or(ListingStatus::Listed);
  p.price_award = pricing::parse_price_award(b.value("priceAward", "NoData")).value_or(pricing::PriceAward::NoData);
  p.comparables = b.value("comparables", std::vector<Money>{});
  p.created_at = b.value("createdAt", Timestamp{0});
  p.updated_at = b.value("updatedAt", Timestamp{0});
  if (const auto it = b.find("photo"); it != b.end() && it->is_object()) {
    p.photo = PhotoRef{it->at("blob").get<std::string>(), it->at("mediaType").get<std::string>(),
                       it->at("size").get<std::size_t>()};
  }
  if (const auto it = b.find("idealPrice"); it != b.end() && it->is_object()) {
    p.ideal_price = pricing::IdealPrice{it->at("value").get<Money>(), it->at("sampleSize").get<int>()};
  }
  if (const auto it = b.find("activeRequest"); it != b.end() && it->is_string()) {
    p.active_request = it->get<std::string>();
  }
  return p;
}

Json ListingSummary::to_json() const {
  return {{"id", id},
          {"name", name},
          {"price", price},
          {"category", category_id},
          {"sellerName", seller_name},
          {"sellerPoints", seller_points},
          {"createdAt", created_at}};
}

Json ListingDetail::to_json() const {
  const auto& l = listing;
  Json j = {{"id", l.id},
            {"name", l.name},
            {"description", l.description},
            {"price", l.price},
            {"category", l.category_id},
            {"quantity", l.quantity},
            {"shipping", l.shipping},
            {"status", to_string(l.status)},
            {"priceAward", pricing::to_string(l.price_award)},
            {"createdAt", l.created_at},
            {"updatedAt", l.updated_at},
            {"seller", {{"id", seller.id}, {"name", seller.name}, {"points", seller.points}}}};
  j["idealPrice"] = l.ideal_price ? Json(l.ideal_price->value) : Json();
  j["photo"] = l.photo ? Json("/products/" + l.id + "/photo") : Json();
  return j;
}

std::vector<std::string> query_tokens(std::string_view query) { return text::split_whitespace(text::lower(query)); }

bool matches(const std::vector<std::string>& tokens, std::string_view name, std::string_view description) {
  const auto haystack = text::lower(name) + " " + text::lower(description);
  return std::all_of(tokens.begin(), tokens.end(),
                     [&](const std::string& t) { return haystack.find(t) != std::string::npos; });
}

int relevance(const std::vector<std::string>& tokens, std::string_view name, std::string_view description) {
  if (tokens.empty()) return 1;
  const auto n = text::lower(name);
  const auto d = text::lower(description);
  int score = 0;
  for (const auto& t : tokens) {
    if (n.find(t) != std::string::npos) score += 2;
    if (d.find(t) != std::string::npos) score += 1;
  }
  return score;
}

Catalog::Catalog(store::DocumentStore& store, reputation::Ledger& ledger, const auth::AuthService& auth,
                 const compliance::BlacklistConfig& blacklist, compliance::ClassifierClient& classifier,
                 pricing::PriceSourceClient& price_source, const Clock& clock,
                 compliance::ClassifierSettings classifier_settings)
    : store_(store),
      ledger_(ledger),
      auth_(auth),
      blacklist_(blacklist),
      classifier_(classifier),
      price_source_(price_source),
      clock_(clock),
      classifier_settings_(std::move(classifier_settings)) {}

std::vector<Category> Catalog::seed_categories(const std::vector<std::string>& names) {
  std::vector<std::string> cleaned;
  for (const auto& raw : names) {
    auto name = text::trim(raw);
    validate_text(name, "category", 1, kMaxNameLength);
    cleaned.push_back(std::move(name));
  }
  std::lock_guard lock(category_mutex_);
  auto existing = list_categories();
  for (const auto& name : cleaned) {
    const bool known = std::any_of(existing.begin(), existing.end(), [&](const Category& c) { return c.name == name; });
    if (known) continue;
    const auto doc = store_.put(kCategories, {"", {{"name", name}}});
    existing.push_back({doc.id, name});
  }
  return existing;
}

std::vector<Category> Catalog::list_categories() const {
  std::vector<Category> out;
  for (const auto& doc : store_.query(kCategories, {})) out.push_back({doc.id, doc.body.at("name").get<std::string>()});
  return out;
}

std::optional<Category> Catalog::find_category(std::string_view id) const {
  auto doc = store_.get(kCategories, id);
  if (!doc) return std::nullopt;
  return Category{doc->id, doc->body.at("name").get<std::string>()};
}

ProductListing Catalog::create_listing(const auth::Claims& seller, const ListingDraft& draft) {
  ProductListing listing;
  listing.name = text::trim(draft.name);
  listing.description = text::trim(draft.description);
  validate_text(listing.name, "name", 1, kMaxNameLength);
  validate_text(listing.description, "description", 0, kMaxDescriptionLength);
  if (draft.price < 0) throw Error(ErrorCode::ValidationFailed, "price must be >= 0", "price");
  if (draft.quantity < 1) throw Error(ErrorCode::ValidationFailed, "quantity must be >= 1", "quantity");
  if (draft.photo) {
    const auto& p = *draft.photo;
    if (p.media_type != kMediaJpeg && p.media_type != kMediaPng) {
      throw Error(ErrorCode::ValidationFailed, "photo must be image/jpeg or image/png", "photo");
    }
    if (p.bytes.empty() || p.bytes.size() > kMaxPhotoBytes) {
      throw Error(ErrorCode::ValidationFailed, "photo must be 1 byte to 2 MiB", "photo");
    }
  }
  const auto category = find_category(draft.category_id);
  if (!category) throw Error(ErrorCode::UnknownCategory, "unknown category " + draft.category_id, "category");

  const compliance::ComplianceRequest request{listing.name, listing.description, category->name, draft.photo};
  const auto verdict = compliance::check_compliance(request, blacklist_, classifier_, classifier_settings_);
  if (!verdict.compliant) {
    ledger_.apply_immediate(seller.subject, reputation::ModifierKind::NonCompliantListing);
    throw Error(ErrorCode::NonCompliant, verdict.reason);
  }

  const auto quotes = pricing::fetch_comparables(listing.name, price_source_);
  for (const auto& q : quotes) listing.comparables.push_back(q.price);
  listing.ideal_price = pricing::compute_ideal(quotes);
  listing.price_award = pricing::evaluate_listing_price(draft.price, listing.ideal_price);

  listing.id = store_.new_id();
  listing.price = draft.price;
  listing.seller_id = seller.subject;
  listing.category_id = category->id;
  listing.quantity = draft.quantity;
  listing.shipping = draft.shipping;
  listing.status = ListingStatus::Listed;
  listing.created_at = listing.updated_at = clock_.now();
  if (draft.photo) {
    listing.photo = PhotoRef{store_.put_blob(draft.photo->bytes), draft.photo->media_type, draft.photo->bytes.size()};
  }

  // TransactionCompleted is accrued here and settled with the sale; crediting
  // it when the seller resolves "sold" would replay to the same total.
  std::vector<reputation::ModifierKind> kinds{reputation::ModifierKind::TransactionCompleted};
  if (draft.price == 0) kinds.push_back(reputation::ModifierKind::FreeListing);
  if (listing.price_award == pricing::PriceAward::Economical) kinds.push_back(reputation::ModifierKind::EconomicalListing);
  ledger_.accrue_pending(seller.subject, listing.id, kinds);

  try {
    listing.version = store_.insert(kProducts, {listing.id, listing.to_json()}).value().version;
  } catch (...) {
    ledger_.void_pending(seller.subject, listing.id);
    throw;
  }
  return listing;
}

std::vector<ListingSummary> Catalog::search(const SearchQuery& query) const {
  const auto tokens = query_tokens(query.text);
  store::Query q;
  q.where = [&](const Json& b) {
    if (b.value("status", "") != to_string(ListingStatus::Listed)) return false;
    const auto price = b.value("price", Money{0});
    if (query.category_id && b.value("category", "") != *query.category_id) return false;
    if (query.min_price && price < *query.min_price) return false;
    if (query.max_price && price > *query.max_price) return false;
    return matches(tokens, b.value("name", ""), b.value("description", ""));
  };
  std::unordered_map<std::string, SellerProfile> sellers;
  std::vector<ListingSummary> out;
  for (const auto& doc : store_.query(kProducts, q)) {
    const auto listing = ProductListing::from_document(doc);
    auto it = sellers.find(listing.seller_id);
    if (it == sellers.end()) it = sellers.emplace(listing.seller_id, seller_profile(listing.seller_id)).first;
    ListingSummary s;
    s.id = listing.id;
    s.name = listing.name;
    s.price = listing.price;
    s.category_id = listing.category_id;
    s.seller_id = listing.seller_id;
    s.seller_name = it->second.name;
    s.seller_points = it->second.points;
    s.created_at = listing.created_at;
    s.relevance = relevance(tokens, listing.name, listing.description);
    s.score = s.relevance * ledger_.search_boost(s.seller_points);
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const ListingSummary& a, const ListingSummary& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.id > b.id;
  });
  return out;
}

SellerProfile Catalog::seller_profile(const std::string& user_id) const {
  SellerProfile p{user_id, "", 0};
  if (auto user = auth_.find_by_id(user_id)) p.name = user->name;
  if (auto acct = ledger_.account(user_id)) p.points = acct->credited;
  return p;
}

ListingDetail Catalog::get_listing(std::string_view id) const {
  auto doc = store_.get(kProducts, id);
  if (!doc) throw Error(ErrorCode::NotFound, "no such product");
  auto listing = ProductListing::from_document(*doc);
  if (listing.status == ListingStatus::Withdrawn) throw Error(ErrorCode::NotFound, "no such product");
  auto seller = seller_profile(listing.seller_id);
  return {std::move(listing), std::move(seller)};
}

void Catalog::delete_listing(const auth::Claims& seller, std::string_view id) {
  for (;;) {
    auto doc = store_.get(kProducts, id);
    if (!doc) throw Error(ErrorCode::NotFound, "no such product");
    auto listing = ProductListing::from_document(*doc);
    if (listing.status == ListingStatus::Withdrawn) throw Error(ErrorCode::NotFound, "no such product");
    if (listing.seller_id != seller.subject) throw Error(ErrorCode::Unauthorized, "only the seller may delete a listing");
    if (listing.status == ListingStatus::Reserved) {
      throw Error(ErrorCode::ReservedCannotDelete, "listing is reserved by a buyer");
    }
    listing.status = ListingStatus::Withdrawn;
    listing.updated_at = clock_.now();
    const auto cas = store_.compare_and_set(kProducts, id, doc->version, listing.to_json());
    if (cas.status == store::CasStatus::VersionConflict) continue;
    if (cas.status == store::CasStatus::NotFound) throw Error(ErrorCode::NotFound, "no such product");
    ledger_.void_pending(listing.seller_id, listing.id);
    store_.remove(kProducts, id);
    return;
  }
}

compliance::Photo Catalog::photo(std::string_view id) const {
  const auto detail = get_listing(id);
  if (!detail.listing.photo) throw Error(ErrorCode::NotFound, "listing has no photo");
  auto bytes = store_.get_blob(detail.listing.photo->blob);
  if (!bytes) throw Error(ErrorCode::NotFound, "photo blob missing");
  return {detail.listing.photo->media_type, std::move(*bytes)};
}

}  // namespace market::catalog
