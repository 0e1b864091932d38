#include "market/reputation.hpp"

#include <algorithm>
#include <cstdio>

#include "market/error.hpp"

namespace market::reputation {
namespace {

using store::Json;
constexpr auto kCollection = store::collections::kReputation;

Json modifiers_to_json(const std::vector<Modifier>& mods) {
  Json arr = Json::array();
  for (const auto& m : mods) arr.push_back({{"kind", to_string(m.kind)}, {"magnitude", m.magnitude}});
  return arr;
}

std::vector<Modifier> modifiers_from_json(const Json& arr) {
  std::vector<Modifier> out;
  for (const auto& j : arr) {
    const auto kind = parse_modifier_kind(j.at("kind").get<std::string>()).value();
    out.push_back({kind, j.at("magnitude").get<Points>(), timing_of(kind)});
  }
  return out;
}

struct AccountState {
  ReputationAccount account;
  std::uint64_t seq = 0;
};

Json account_to_json(const AccountState& s) {
  Json pending = Json::object();
  for (const auto& [listing, mods] : s.account.pending) pending[listing] = modifiers_to_json(mods);
  return {{"type", "account"}, {"userId", s.account.user_id}, {"credited", s.account.credited},
          {"pending", pending}, {"seq", s.seq}};
}

AccountState account_from_json(const Json& j) {
  AccountState s;
  s.account.user_id = j.at("userId").get<std::string>();
  s.account.credited = j.at("credited").get<Points>();
  for (const auto& [listing, mods] : j.at("pending").items()) {
    s.account.pending[listing] = modifiers_from_json(mods);
  }
  s.seq = j.value("seq", std::uint64_t{0});
  return s;
}

std::string event_id(const std::string& user_id, std::uint64_t seq) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%010llu", static_cast<unsigned long long>(seq));
  return user_id + ":" + buf;
}

LedgerEvent event_from_document(const store::Document& doc) {
  const auto& b = doc.body;
  LedgerEvent e;
  e.id = doc.id;
  e.user_id = b.at("userId").get<std::string>();
  const auto op = b.at("op").get<std::string>();
  for (auto candidate : {LedgerOp::Init, LedgerOp::Immediate, LedgerOp::Accrue, LedgerOp::Settle, LedgerOp::Void}) {
    if (to_string(candidate) == op) e.op = candidate;
  }
  e.listing_id = b.value("listingId", std::string{});
  e.modifiers = modifiers_from_json(b.at("modifiers"));
  e.delta = b.at("delta").get<Points>();
  e.credited_after = b.at("creditedAfter").get<Points>();
  e.at = b.at("at").get<Timestamp>();
  return e;
}

}  // namespace

Timing timing_of(ModifierKind kind) noexcept {
  switch (kind) {
    case ModifierKind::NonCompliantListing:
    case ModifierKind::TosViolation:
      return Timing::Immediate;
    default:
      return Timing::OnSale;
  }
}

std::string_view to_string(ModifierKind kind) noexcept {
  switch (kind) {
    case ModifierKind::TransactionCompleted: return "TransactionCompleted";
    case ModifierKind::FreeListing: return "FreeListing";
    case ModifierKind::EconomicalListing: return "EconomicalListing";
    case ModifierKind::NonCompliantListing: return "NonCompliantListing";
    case ModifierKind::TosViolation: return "TosViolation";
  }
  return "?";
}

std::optional<ModifierKind> parse_modifier_kind(std::string_view name) noexcept {
  for (auto k : kAllModifierKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(LedgerOp op) noexcept {
  switch (op) {
    case LedgerOp::Init: return "init";
    case LedgerOp::Immediate: return "immediate";
    case LedgerOp::Accrue: return "accrue";
    case LedgerOp::Settle: return "settle";
    case LedgerOp::Void: return "void";
  }
  return "?";
}

Points ModifierTable::magnitude(ModifierKind kind) const noexcept {
  switch (kind) {
    case ModifierKind::TransactionCompleted: return transaction_completed;
    case ModifierKind::FreeListing: return free_listing;
    case ModifierKind::EconomicalListing: return economical_listing;
    case ModifierKind::NonCompliantListing: return non_compliant_listing;
    case ModifierKind::TosViolation: return tos_violation;
  }
  return 0;
}

Modifier ModifierTable::modifier(ModifierKind kind) const noexcept {
  return {kind, magnitude(kind), timing_of(kind)};
}

void ModifierTable::validate() const {
  for (auto k : kAllModifierKinds) {
    const auto m = magnitude(k);
    const bool positive_kind = timing_of(k) == Timing::OnSale;
    if (positive_kind ? m <= 0 : m >= 0) {
      throw Error(ErrorCode::ConfigInvalid,
                  "modifier " + std::string(to_string(k)) + " has the wrong sign: " + std::to_string(m));
    }
  }
}

Points ReputationAccount::pending_total() const noexcept {
  Points total = 0;
  for (const auto& [listing, mods] : pending) {
    for (const auto& m : mods) total += m.magnitude;
  }
  return total;
}

double search_boost(Points credited, double alpha, Points cap) noexcept {
  if (cap <= 0) return 1.0;
  const auto clamped = std::clamp<Points>(credited, 0, cap);
  return 1.0 + alpha * static_cast<double>(clamped) / static_cast<double>(cap);
}

Ledger::Ledger(store::DocumentStore& store, const Clock& clock, ReputationConfig config)
    : store_(store), clock_(clock), config_(config) {
  config_.table.validate();
  if (config_.boost_cap <= 0 || config_.boost_alpha < 0) {
    throw Error(ErrorCode::ConfigInvalid, "boost_cap must be positive and boost_alpha non-negative");
  }
}

ReputationAccount Ledger::init_account(const std::string& user_id) {
  AccountState state;
  state.account.user_id = user_id;
  state.account.credited = config_.initial_points;
  state.seq = 1;
  if (!store_.insert(kCollection, {user_id, account_to_json(state)})) {
    throw Error(ErrorCode::AccountExists, "reputation account already exists for " + user_id);
  }
  store_.insert(kCollection,
                {event_id(user_id, 1),
                 {{"type", "event"}, {"userId", user_id}, {"seq", 1}, {"op", to_string(LedgerOp::Init)},
                  {"listingId", ""}, {"modifiers", Json::array()}, {"delta", config_.initial_points},
                  {"creditedAfter", config_.initial_points}, {"at", clock_.now()}}});
  return state.account;
}

template <class Mutate>
ReputationAccount Ledger::mutate(const std::string& user_id, Mutate&& fn) {
  for (;;) {
    auto doc = store_.get(kCollection, user_id);
    if (!doc || doc->body.value("type", "") != "account") {
      throw Error(ErrorCode::UnknownAccount, "no reputation account for " + user_id);
    }
    auto state = account_from_json(doc->body);
    // nullopt from fn means no-op: nothing is written or logged.
    auto change = fn(state.account);
    if (!change) return state.account;
    state.seq += 1;
    auto cas = store_.compare_and_set(kCollection, user_id, doc->version, account_to_json(state));
    if (cas.status == store::CasStatus::VersionConflict) continue;
    if (cas.status == store::CasStatus::NotFound) {
      throw Error(ErrorCode::UnknownAccount, "no reputation account for " + user_id);
    }
    const auto& [op, listing, mods, delta] = *change;
    store_.insert(kCollection,
                  {event_id(user_id, state.seq),
                   {{"type", "event"}, {"userId", user_id}, {"seq", state.seq}, {"op", to_string(op)},
                    {"listingId", listing}, {"modifiers", modifiers_to_json(mods)}, {"delta", delta},
                    {"creditedAfter", state.account.credited}, {"at", clock_.now()}}});
    return state.account;
  }
}

namespace {
struct Change {
  LedgerOp op;
  std::string listing;
  std::vector<Modifier> modifiers;
  Points delta;
};
}  // namespace

Points Ledger::apply_immediate(const std::string& user_id, ModifierKind kind) {
  if (timing_of(kind) != Timing::Immediate) {
    throw Error(ErrorCode::WrongTiming, std::string(to_string(kind)) + " is credited on sale, not immediately");
  }
  const auto mod = config_.table.modifier(kind);
  return mutate(user_id, [&](ReputationAccount& acct) -> std::optional<Change> {
           acct.credited += mod.magnitude;
           return Change{LedgerOp::Immediate, "", {mod}, mod.magnitude};
         }).credited;
}

ReputationAccount Ledger::accrue_pending(const std::string& user_id, const std::string& listing_id,
                                         const std::vector<ModifierKind>& kinds) {
  std::vector<Modifier> mods;
  for (auto k : kinds) {
    if (timing_of(k) != Timing::OnSale) {
      throw Error(ErrorCode::WrongTiming, std::string(to_string(k)) + " is an immediate modifier");
    }
    mods.push_back(config_.table.modifier(k));
  }
  return mutate(user_id, [&](ReputationAccount& acct) -> std::optional<Change> {
    if (mods.empty()) return std::nullopt;
    auto& slot = acct.pending[listing_id];
    slot.insert(slot.end(), mods.begin(), mods.end());
    return Change{LedgerOp::Accrue, listing_id, mods, 0};
  });
}

Points Ledger::settle_on_sale(const std::string& user_id, const std::string& listing_id) {
  return mutate(user_id, [&](ReputationAccount& acct) -> std::optional<Change> {
           auto it = acct.pending.find(listing_id);
           if (it == acct.pending.end()) {
             throw Error(ErrorCode::NothingPending, "nothing pending for listing " + listing_id);
           }
           Points sum = 0;
           for (const auto& m : it->second) sum += m.magnitude;
           auto mods = std::move(it->second);
           acct.pending.erase(it);
           acct.credited += sum;
           return Change{LedgerOp::Settle, listing_id, std::move(mods), sum};
         }).credited;
}

void Ledger::void_pending(const std::string& user_id, const std::string& listing_id) {
  mutate(user_id, [&](ReputationAccount& acct) -> std::optional<Change> {
    auto it = acct.pending.find(listing_id);
    if (it == acct.pending.end()) return std::nullopt;
    auto mods = std::move(it->second);
    acct.pending.erase(it);
    return Change{LedgerOp::Void, listing_id, std::move(mods), 0};
  });
}

std::optional<ReputationAccount> Ledger::account(const std::string& user_id) const {
  auto doc = store_.get(kCollection, user_id);
  if (!doc || doc->body.value("type", "") != "account") return std::nullopt;
  return account_from_json(doc->body).account;
}

Points Ledger::credited(const std::string& user_id) const {
  auto acct = account(user_id);
  if (!acct) throw Error(ErrorCode::UnknownAccount, "no reputation account for " + user_id);
  return acct->credited;
}

std::vector<LedgerEvent> Ledger::events(const std::string& user_id) const {
  store::Query q;
  q.where = [&](const Json& b) { return b.value("type", "") == "event" && b.value("userId", "") == user_id; };
  q.sort = store::SortSpec{"seq", false};
  std::vector<LedgerEvent> out;
  for (const auto& doc : store_.query(kCollection, q)) out.push_back(event_from_document(doc));
  return out;
}

std::vector<LedgerEvent> Ledger::all_events() const {
  store::Query q;
  q.where = [](const Json& b) { return b.value("type", "") == "event"; };
  std::vector<LedgerEvent> out;
  for (const auto& doc : store_.query(kCollection, q)) out.push_back(event_from_document(doc));
  return out;
}

double Ledger::search_boost(Points credited) const noexcept {
  return reputation::search_boost(credited, config_.boost_alpha, config_.boost_cap);
}

}  // namespace market::reputation
