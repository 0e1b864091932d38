#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "market/app.hpp"

namespace market::testing {

// Fast hashing, short-lived secrets; everything else at its default.
Config test_config();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

struct TestUser {
  auth::UserAccount account;
  std::string token;
  auth::Claims claims;
};

// An App over in-memory (or given) storage with deterministic adapters.
// The classifier accepts anything not registered otherwise.
class World {
 public:
  explicit World(std::uint64_t seed = 1, Config config = test_config(),
                 std::unique_ptr<store::DocumentStore> store = nullptr);

  TestUser register_user(const std::string& name, const std::string& email,
                         const std::string& password = "correct-horse-9");
  std::string otp_for(const std::string& email) const;
  std::string category(const std::string& name);
  catalog::ProductListing list(const TestUser& seller, const std::string& name, pricing::Money price,
                               const std::string& category_name = "Calculator",
                               const std::string& description = "good condition");

  ManualClock clock;
  SeededRandom random;
  CaptureMailer mailer;
  compliance::MockClassifier classifier;
  pricing::MockPriceSource prices;
  compliance::BlacklistConfig blacklist;
  std::unique_ptr<store::DocumentStore> store;
  std::unique_ptr<App> app;
};

}  // namespace market::testing
