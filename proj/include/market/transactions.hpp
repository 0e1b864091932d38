#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "market/auth.hpp"
#include "market/catalog.hpp"
#include "market/clock.hpp"
#include "market/reputation.hpp"
#include "market/store.hpp"

namespace market::transactions {

// Requested -> {Pending, Sold, Declined}; Pending -> {Sold, Declined}.
// Sold and Declined are terminal.
enum class RequestState { Requested, Pending, Sold, Declined };
enum class Outcome { Sold, Pending, Declined };

std::string_view to_string(RequestState state) noexcept;
std::optional<RequestState> parse_request_state(std::string_view name) noexcept;
std::optional<Outcome> parse_outcome(std::string_view name) noexcept;
bool is_terminal(RequestState state) noexcept;

struct PurchaseRequest {
  std::string id;
  std::string product_id;
  std::string buyer_id;
  std::string seller_id;
  RequestState state = RequestState::Requested;
  Timestamp created_at = 0;
  std::optional<Timestamp> resolved_at;
  // Snapshot so the request stays displayable after the product is gone.
  std::string product_name;
  pricing::Money product_price = 0;
  std::uint64_t version = 0;

  // Wire form {id, productId, buyerId, sellerId, state, createdAt, resolvedAt}.
  store::Json to_json() const;
  store::Json product_summary() const;
  static PurchaseRequest from_document(const store::Document& doc);
};

struct Contact {
  std::string name;
  std::string email;
  std::string phone;
};

struct ContactExchange {
  Contact buyer;
  Contact seller;

  store::Json to_json() const;
};

class Transactions {
 public:
  Transactions(store::DocumentStore& store, const auth::AuthService& auth, reputation::Ledger& ledger,
               const Clock& clock);

  // Atomically moves the product Listed -> Reserved and opens a request.
  std::pair<PurchaseRequest, ContactExchange> request_product(const auth::Claims& buyer,
                                                              std::string_view product_id);
  // Seller-only. Choosing pending on an already Pending request is a no-op.
  PurchaseRequest resolve(const auth::Claims& seller, std::string_view request_id, Outcome outcome);
  // Seller's open requests, newest first.
  std::vector<PurchaseRequest> pending_prompts(const auth::Claims& seller) const;
  // Buyer's requests in every state, newest first.
  std::vector<PurchaseRequest> my_requests(const auth::Claims& buyer) const;

  std::optional<PurchaseRequest> find(std::string_view request_id) const;

 private:
  Contact contact_for(const std::string& user_id) const;
  void release_product(const PurchaseRequest& request);

  store::DocumentStore& store_;
  const auth::AuthService& auth_;
  reputation::Ledger& ledger_;
  const Clock& clock_;
};

}  // namespace market::transactions
