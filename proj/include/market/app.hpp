#pragma once

#include <memory>
#include <string_view>

#include "market/auth.hpp"
#include "market/catalog.hpp"
#include "market/clock.hpp"
#include "market/compliance.hpp"
#include "market/config.hpp"
#include "market/mailer.hpp"
#include "market/pricing.hpp"
#include "market/random.hpp"
#include "market/reputation.hpp"
#include "market/store.hpp"
#include "market/transactions.hpp"

namespace market {

inline constexpr std::string_view kVersion = "0.1.0";

// Injection points for tests; anything left null is built from the config.
struct AppOverrides {
  store::DocumentStore* store = nullptr;
  const Clock* clock = nullptr;
  RandomSource* random = nullptr;
  Mailer* mailer = nullptr;
  compliance::ClassifierClient* classifier = nullptr;
  pricing::PriceSourceClient* price_source = nullptr;
  const compliance::BlacklistConfig* blacklist = nullptr;
};

// Wires every service from one Config.
class App {
 public:
  explicit App(Config config, AppOverrides overrides = {});

  const Config& config() const noexcept { return config_; }
  store::DocumentStore& store() noexcept { return *store_; }
  const Clock& clock() const noexcept { return *clock_; }
  Mailer& mailer() noexcept { return *mailer_; }
  // Set when the mailer is the built-in capture adapter.
  CaptureMailer* capture_mailer() noexcept { return owned_mailer_.get(); }
  reputation::Ledger& ledger() noexcept { return *ledger_; }
  auth::AuthService& auth() noexcept { return *auth_; }
  catalog::Catalog& catalog() noexcept { return *catalog_; }
  transactions::Transactions& transactions() noexcept { return *transactions_; }

 private:
  Config config_;
  std::unique_ptr<store::DocumentStore> owned_store_;
  std::unique_ptr<Clock> owned_clock_;
  std::unique_ptr<RandomSource> owned_random_;
  std::unique_ptr<CaptureMailer> owned_mailer_;
  std::unique_ptr<compliance::ClassifierClient> owned_classifier_;
  std::unique_ptr<pricing::PriceSourceClient> owned_price_source_;
  std::unique_ptr<compliance::BlacklistConfig> owned_blacklist_;

  store::DocumentStore* store_ = nullptr;
  const Clock* clock_ = nullptr;
  RandomSource* random_ = nullptr;
  Mailer* mailer_ = nullptr;
  compliance::ClassifierClient* classifier_ = nullptr;
  pricing::PriceSourceClient* price_source_ = nullptr;
  const compliance::BlacklistConfig* blacklist_ = nullptr;

  std::unique_ptr<reputation::Ledger> ledger_;
  std::unique_ptr<auth::AuthService> auth_;
  std::unique_ptr<catalog::Catalog> catalog_;
  std::unique_ptr<transactions::Transactions> transactions_;
};

}  // namespace market
