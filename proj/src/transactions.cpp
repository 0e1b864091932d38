#include "market/transactions.hpp"

#include "market/error.hpp"

namespace market::transactions {
namespace {

using store::Json;
using catalog::ListingStatus;
using catalog::ProductListing;
constexpr auto kProducts = store::collections::kProducts;
constexpr auto kRequests = store::collections::kRequests;

}  // namespace

std::string_view to_string(RequestState state) noexcept {
  switch (state) {
    case RequestState::Requested: return "Requested";
    case RequestState::Pending: return "Pending";
    case RequestState::Sold: return "Sold";
    case RequestState::Declined: return "Declined";
  }
  return "Requested";
}

std::optional<RequestState> parse_request_state(std::string_view name) noexcept {
  for (auto s : {RequestState::Requested, RequestState::Pending, RequestState::Sold, RequestState::Declined}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view name) noexcept {
  if (name == "sold") return Outcome::Sold;
  if (name == "pending") return Outcome::Pending;
  if (name == "declined") return Outcome::Declined;
  return std::nullopt;
}

bool is_terminal(RequestState state) noexcept {
  return state == RequestState::Sold || state == RequestState::Declined;
}

Json PurchaseRequest::to_json() const {
  return {{"id", id},
          {"productId", product_id},
          {"buyerId", buyer_id},
          {"sellerId", seller_id},
          {"state", to_string(state)},
          {"createdAt", created_at},
          {"resolvedAt", resolved_at ? Json(*resolved_at) : Json()}};
}

Json PurchaseRequest::product_summary() const {
  return {{"id", product_id}, {"name", product_name}, {"price", product_price}};
}

PurchaseRequest PurchaseRequest::from_document(const store::Document& doc) {
  const auto& b = doc.body;
  PurchaseRequest r;
  r.id = doc.id;
  r.version = doc.version;
  r.product_id = b.at("productId").get<std::string>();
  r.buyer_id = b.at("buyerId").get<std::string>();
  r.seller_id = b.at("sellerId").get<std::string>();
  r.state = parse_request_state(b.at("state").get<std::string>()).value_or(RequestState::Requested);
  r.created_at = b.at("createdAt").get<Timestamp>();
  if (const auto it = b.find("resolvedAt"); it != b.end() && !it->is_null()) r.resolved_at = it->get<Timestamp>();
  r.product_name = b.value("productName", "");
  r.product_price = b.value("productPrice", pricing::Money{0});
  return r;
}

namespace {
Json request_body(const PurchaseRequest& r) {
  auto j = r.to_json();
  j.erase("id");
  j["productName"] = r.product_name;
  j["productPrice"] = r.product_price;
  return j;
}
}  // namespace

Json ContactExchange::to_json() const {
  auto contact = [](const Contact& c) { return Json{{"name", c.name}, {"email", c.email}, {"phone", c.phone}}; };
  return {{"buyer", contact(buyer)}, {"seller", contact(seller)}};
}

Transactions::Transactions(store::DocumentStore& store, const auth::AuthService& auth, reputation::Ledger& ledger,
                           const Clock& clock)
    : store_(store), auth_(auth), ledger_(ledger), clock_(clock) {}

Contact Transactions::contact_for(const std::string& user_id) const {
  const auto user = auth_.find_by_id(user_id);
  if (!user) throw Error(ErrorCode::NotFound, "user no longer exists");
  return {user->name, user->email, user->phone};
}

std::pair<PurchaseRequest, ContactExchange> Transactions::request_product(const auth::Claims& buyer,
                                                                          std::string_view product_id) {
  const auto request_id = store_.new_id();
  for (;;) {
    const auto doc = store_.get(kProducts, product_id);
    if (!doc) throw Error(ErrorCode::NotFound, "no such product");
    auto listing = ProductListing::from_document(*doc);
    if (listing.status == ListingStatus::Withdrawn) throw Error(ErrorCode::NotFound, "no such product");
    if (listing.seller_id == buyer.subject) {
      throw Error(ErrorCode::SelfRequestForbidden, "sellers cannot request their own listing");
    }
    if (listing.status != ListingStatus::Listed) {
      throw Error(ErrorCode::AlreadyReserved, "product is already reserved by another buyer");
    }
    listing.status = ListingStatus::Reserved;
    listing.active_request = request_id;
    listing.updated_at = clock_.now();
    const auto cas = store_.compare_and_set(kProducts, product_id, doc->version, listing.to_json());
    if (cas.status == store::CasStatus::VersionConflict) continue;
    if (cas.status == store::CasStatus::NotFound) throw Error(ErrorCode::NotFound, "no such product");

    PurchaseRequest request;
    request.id = request_id;
    request.product_id = listing.id;
    request.buyer_id = buyer.subject;
    request.seller_id = listing.seller_id;
    request.state = RequestState::Requested;
    request.created_at = clock_.now();
    request.product_name = listing.name;
    request.product_price = listing.price;
    // The open request doubles as the seller's notification record.
    store_.insert(kRequests, {request.id, request_body(request)});
    return {request, ContactExchange{contact_for(request.buyer_id), contact_for(request.seller_id)}};
  }
}

void Transactions::release_product(const PurchaseRequest& request) {
  for (;;) {
    const auto doc = store_.get(kProducts, request.product_id);
    if (!doc) return;
    auto listing = ProductListing::from_document(*doc);
    if (listing.active_request != request.id) return;
    listing.status = ListingStatus::Listed;
    listing.active_request.reset();
    listing.updated_at = clock_.now();
    if (store_.compare_and_set(kProducts, request.product_id, doc->version, listing.to_json()).status !=
        store::CasStatus::VersionConflict) {
      return;
    }
  }
}

PurchaseRequest Transactions::resolve(const auth::Claims& seller, std::string_view request_id, Outcome outcome) {
  for (;;) {
    const auto doc = store_.get(kRequests, request_id);
    if (!doc) throw Error(ErrorCode::NotFound, "no such request");
    auto request = PurchaseRequest::from_document(*doc);
    if (request.seller_id != seller.subject) throw Error(ErrorCode::Unauthorized, "only the seller may resolve");
    if (is_terminal(request.state)) throw Error(ErrorCode::AlreadyResolved, "request is already resolved");

    switch (outcome) {
      case Outcome::Pending:
        if (request.state == RequestState::Pending) return request;
        request.state = RequestState::Pending;
        break;
      case Outcome::Sold:
        request.state = RequestState::Sold;
        request.resolved_at = clock_.now();
        break;
      case Outcome::Declined:
        request.state = RequestState::Declined;
        request.resolved_at = clock_.now();
        break;
    }
    const auto cas = store_.compare_and_set(kRequests, request_id, doc->version, request_body(request));
    if (cas.status == store::CasStatus::VersionConflict) continue;
    if (cas.status == store::CasStatus::NotFound) throw Error(ErrorCode::NotFound, "no such request");
    request.version = cas.document.version;

    if (outcome == Outcome::Sold) {
      store_.remove(kProducts, request.product_id);
      try {
        ledger_.settle_on_sale(request.seller_id, request.product_id);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NothingPending) throw;
      }
    } else if (outcome == Outcome::Declined) {
      // Accrued points stay attached to the listing until it actually sells.
      release_product(request);
    }
    return request;
  }
}

std::vector<PurchaseRequest> Transactions::pending_prompts(const auth::Claims& seller) const {
  store::Query q;
  q.where = [&](const Json& b) {
    if (b.value("sellerId", "") != seller.subject) return false;
    const auto state = b.value("state", "");
    return state == to_string(RequestState::Requested) || state == to_string(RequestState::Pending);
  };
  q.sort = store::SortSpec{"createdAt", true};
  std::vector<PurchaseRequest> out;
  for (const auto& doc : store_.query(kRequests, q)) out.push_back(PurchaseRequest::from_document(doc));
  return out;
}

std::vector<PurchaseRequest> Transactions::my_requests(const auth::Claims& buyer) const {
  store::Query q;
  q.where = [&](const Json& b) { return b.value("buyerId", "") == buyer.subject; };
  q.sort = store::SortSpec{"createdAt", true};
  std::vector<PurchaseRequest> out;
  for (const auto& doc : store_.query(kRequests, q)) out.push_back(PurchaseRequest::from_document(doc));
  return out;
}

std::optional<PurchaseRequest> Transactions::find(std::string_view request_id) const {
  auto doc = store_.get(kRequests, request_id);
  if (!doc) return std::nullopt;
  return PurchaseRequest::from_document(*doc);
}

}  // namespace market::transactions
