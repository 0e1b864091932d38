#include "support.hpp"

#include <unistd.h>

#include <atomic>
#include <stdexcept>

namespace market::testing {

Config test_config() {
  Config c;
  c.auth.allowed_email_domains = {"campus.edu"};
  c.auth.session_secret = "test-secret-0123456789abcdef";
  c.auth.password_hash_iterations = 1;
  return c;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("market-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

World::World(std::uint64_t seed, Config config, std::unique_ptr<store::DocumentStore> s)
    : random(seed), blacklist(compliance::BlacklistConfig::from_terms({"vape", "pistol", "cocaine"})) {
  store = s ? std::move(s) : store::EmbeddedStore::in_memory();
  classifier.set_default(R"({"compliant": true})");
  AppOverrides o;
  o.store = store.get();
  o.clock = &clock;
  o.random = &random;
  o.mailer = &mailer;
  o.classifier = &classifier;
  o.price_source = &prices;
  o.blacklist = &blacklist;
  app = std::make_unique<App>(std::move(config), o);
}

std::string World::otp_for(const std::string& email) const {
  const auto msg = mailer.last_to(email);
  if (!msg) throw std::runtime_error("no mail for " + email);
  const auto code = extract_otp(msg->body);
  if (!code) throw std::runtime_error("no code in mail for " + email);
  return *code;
}

TestUser World::register_user(const std::string& name, const std::string& email, const std::string& password) {
  app->auth().register_begin({name, email, "555-0100", "C" + name, password});
  auto account = app->auth().verify_otp(email, otp_for(email));
  auto token = app->auth().login(email, password);
  auto claims = app->auth().verify_token(token);
  return {std::move(account), std::move(token), std::move(claims)};
}

std::string World::category(const std::string& name) {
  for (const auto& c : app->catalog().seed_categories({name})) {
    if (c.name == name) return c.id;
  }
  throw std::runtime_error("category not seeded: " + name);
}

catalog::ProductListing World::list(const TestUser& seller, const std::string& name, pricing::Money price,
                                    const std::string& category_name, const std::string& description) {
  catalog::ListingDraft d;
  d.name = name;
  d.description = description;
  d.price = price;
  d.category_id = category(category_name);
  return app->catalog().create_listing(seller.claims, d);
}

}  // namespace market::testing
