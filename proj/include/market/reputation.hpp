#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "market/clock.hpp"
#include "market/store.hpp"

namespace market::reputation {

using Points = std::int64_t;

enum class ModifierKind {
  TransactionCompleted,
  FreeListing,
  EconomicalListing,
  NonCompliantListing,
  TosViolation,
};

inline constexpr std::array kAllModifierKinds = {
    ModifierKind::TransactionCompleted, ModifierKind::FreeListing, ModifierKind::EconomicalListing,
    ModifierKind::NonCompliantListing, ModifierKind::TosViolation};

// Immediate modifiers hit `credited` at once; OnSale ones wait in `pending`
// until the listing they are attached to sells.
enum class Timing { Immediate, OnSale };

Timing timing_of(ModifierKind kind) noexcept;
std::string_view to_string(ModifierKind kind) noexcept;
std::optional<ModifierKind> parse_modifier_kind(std::string_view name) noexcept;

struct Modifier {
  ModifierKind kind;
  Points magnitude;
  Timing timing;
};

struct ModifierTable {
  Points transaction_completed = 10;
  Points free_listing = 20;
  Points economical_listing = 15;
  Points non_compliant_listing = -5;
  Points tos_violation = -50;

  Points magnitude(ModifierKind kind) const noexcept;
  Modifier modifier(ModifierKind kind) const noexcept;
  // Positive kinds must be > 0, negative kinds < 0. Throws ConfigInvalid.
  void validate() const;
};

struct ReputationConfig {
  ModifierTable table;
  Points initial_points = 100;
  double boost_alpha = 0.25;
  Points boost_cap = 500;
};

struct ReputationAccount {
  std::string user_id;
  Points credited = 0;
  std::map<std::string, std::vector<Modifier>> pending;  // listing id -> modifiers

  Points pending_total() const noexcept;
};

enum class LedgerOp { Init, Immediate, Accrue, Settle, Void };

std::string_view to_string(LedgerOp op) noexcept;

// One entry of the append-only ledger log kept in the reputation collection.
struct LedgerEvent {
  std::string id;
  std::string user_id;
  LedgerOp op;
  std::string listing_id;  // empty for Init/Immediate
  std::vector<Modifier> modifiers;
  Points delta = 0;  // change applied to credited
  Points credited_after = 0;
  Timestamp at = 0;
};

// 1 + alpha * clamp(credited, 0, cap) / cap.
double search_boost(Points credited, double alpha, Points cap) noexcept;

class Ledger {
 public:
  Ledger(store::DocumentStore& store, const Clock& clock, ReputationConfig config = {});

  ReputationAccount init_account(const std::string& user_id);
  Points apply_immediate(const std::string& user_id, ModifierKind kind);
  // The caller guarantees the listing belongs to user_id.
  ReputationAccount accrue_pending(const std::string& user_id, const std::string& listing_id,
                                   const std::vector<ModifierKind>& kinds);
  Points settle_on_sale(const std::string& user_id, const std::string& listing_id);
  void void_pending(const std::string& user_id, const std::string& listing_id);

  std::optional<ReputationAccount> account(const std::string& user_id) const;
  // Credited points; UnknownAccount when absent.
  Points credited(const std::string& user_id) const;
  // Log for one user in append order.
  std::vector<LedgerEvent> events(const std::string& user_id) const;
  std::vector<LedgerEvent> all_events() const;

  double search_boost(Points credited) const noexcept;
  const ReputationConfig& config() const noexcept { return config_; }

 private:
  template <class Mutate>
  ReputationAccount mutate(const std::string& user_id, Mutate&& fn);
  void log(const std::string& user_id, LedgerOp op, const std::string& listing_id,
           const std::vector<Modifier>& modifiers, Points delta, Points credited_after);

  store::DocumentStore& store_;
  const Clock& clock_;
  ReputationConfig config_;
};

}  // namespace market::reputation
