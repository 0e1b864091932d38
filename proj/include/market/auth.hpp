#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "market/clock.hpp"
#include "market/mailer.hpp"
#include "market/random.hpp"
#include "market/reputation.hpp"
#include "market/store.hpp"

namespace market::auth {

inline constexpr int kRoleUser = 0;
inline constexpr int kRoleAdmin = 1;
inline constexpr std::size_t kMinPasswordLength = 8;
inline constexpr std::size_t kOtpDigits = 6;

struct AuthConfig {
  std::vector<std::string> allowed_email_domains;
  std::int64_t otp_ttl_seconds = 600;
  int otp_max_attempts = 5;
  std::int64_t session_ttl_seconds = 86400;
  std::string session_secret;
  unsigned password_hash_iterations = 100'000;
};

struct UserAccount {
  std::string id;
  std::string name;
  std::string email;
  std::string password_hash;
  std::string phone;
  std::string college_id;
  int role = kRoleUser;
  Timestamp created_at = 0;
  Timestamp updated_at = 0;

  store::Json to_json() const;
  static UserAccount from_document(const store::Document& doc);
};

struct RegistrationForm {
  std::string name;
  std::string email;
  std::string phone;
  std::string college_id;
  std::string password;
};

struct OtpIssued {
  std::string email;
  Timestamp expires_at = 0;
};

struct Claims {
  std::string subject;
  int role = kRoleUser;
  std::int64_t issued_at = 0;   // seconds
  std::int64_t expires_at = 0;  // seconds

  bool is_admin() const noexcept { return role == kRoleAdmin; }
};

// Salted PBKDF2-HMAC-SHA256. Encoded as
// "pbkdf2-sha256$<iterations>$<salt b64url>$<hash b64url>".
class PasswordHasher {
 public:
  PasswordHasher(RandomSource& random, unsigned iterations);

  std::string hash(std::string_view plain) const;
  bool verify(std::string_view plain, std::string_view encoded) const;

 private:
  RandomSource& random_;
  unsigned iterations_;
};

// base64url(header).base64url(claims).base64url(HMAC-SHA-256 over the
// first two segments), header {"alg":"HS256","typ":"JWT"}, claims
// {sub, role, iat, exp}.
class TokenSigner {
 public:
  explicit TokenSigner(std::string secret);

  std::string sign(const Claims& claims) const;
  // nullopt on any malformation, bad MAC, or now_seconds >= exp.
  std::optional<Claims> verify(std::string_view token, std::int64_t now_seconds) const;

 private:
  std::string secret_;
};

std::string normalize_email(std::string_view email);
bool is_valid_email(std::string_view email);
bool domain_allowed(std::string_view email, const std::vector<std::string>& allowed);

class AuthService {
 public:
  AuthService(store::DocumentStore& store, Mailer& mailer, const Clock& clock, RandomSource& random,
              reputation::Ledger& ledger, AuthConfig config);

  OtpIssued register_begin(const RegistrationForm& form);
  UserAccount verify_otp(std::string_view email, std::string_view code);
  std::string login(std::string_view email, std::string_view password);
  // Throws Unauthenticated.
  Claims verify_token(std::string_view token) const;

  std::optional<UserAccount> find_by_email(std::string_view email) const;
  std::optional<UserAccount> find_by_id(std::string_view id) const;
  // Idempotent; UnknownAccount when no such email.
  UserAccount set_role(std::string_view email, int role);

  const AuthConfig& config() const noexcept { return config_; }
  const PasswordHasher& hasher() const noexcept { return hasher_; }

 private:
  std::string generate_otp();

  store::DocumentStore& store_;
  Mailer& mailer_;
  const Clock& clock_;
  RandomSource& random_;
  reputation::Ledger& ledger_;
  AuthConfig config_;
  PasswordHasher hasher_;
  TokenSigner signer_;
  std::string dummy_hash_;
  std::mutex account_creation_;
};

}  // namespace market::auth
