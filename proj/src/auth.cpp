#include "market/auth.hpp"

#include <algorithm>
#include <charconv>

#include "market/crypto.hpp"
#include "market/error.hpp"
#include "market/text.hpp"

namespace market::auth {
namespace {

using store::Json;
constexpr auto kUsers = store::collections::kUsers;
constexpr auto kOtps = store::collections::kOtps;
constexpr std::string_view kHashScheme = "pbkdf2-sha256";
constexpr std::size_t kSaltBytes = 16;
constexpr std::size_t kHashBytes = 32;
constexpr std::string_view kTokenHeader = R"({"alg":"HS256","typ":"JWT"})";

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view as_view(const std::vector<std::uint8_t>& v) {
  return {reinterpret_cast<const char*>(v.data()), v.size()};
}

void require_text(std::string_view value, std::string_view field, std::size_t max_len) {
  const auto len = text::utf8_length(value);
  if (!len || *len == 0 || *len > max_len) {
    throw Error(ErrorCode::ValidationFailed, std::string(field) + " must be 1-" + std::to_string(max_len) + " characters",
                std::string(field));
  }
}

}  // namespace

Json UserAccount::to_json() const {
  return {{"name", name},          {"email", email},          {"password", password_hash},
          {"phone", phone},        {"collegeId", college_id}, {"role", role},
          {"createdAt", created_at}, {"updatedAt", updated_at}};
}

UserAccount UserAccount::from_document(const store::Document& doc) {
  const auto& b = doc.body;
  UserAccount u;
  u.id = doc.id;
  u.name = b.at("name").get<std::string>();
  u.email = b.at("email").get<std::string>();
  u.password_hash = b.at("password").get<std::string>();
  u.phone = b.value("phone", "");
  u.college_id = b.value("collegeId", "");
  u.role = b.value("role", kRoleUser);
  u.created_at = b.value("createdAt", Timestamp{0});
  u.updated_at = b.value("updatedAt", Timestamp{0});
  return u;
}

PasswordHasher::PasswordHasher(RandomSource& random, unsigned iterations)
    : random_(random), iterations_(iterations) {
  if (iterations_ == 0) throw Error(ErrorCode::ConfigInvalid, "password hash iterations must be positive");
}

std::string PasswordHasher::hash(std::string_view plain) const {
  const auto salt = random_.bytes(kSaltBytes);
  const auto derived = crypto::pbkdf2_sha256(plain, salt, iterations_, kHashBytes);
  return std::string(kHashScheme) + "$" + std::to_string(iterations_) + "$" + crypto::base64url_encode(salt) + "$" +
         crypto::base64url_encode(derived);
}

bool PasswordHasher::verify(std::string_view plain, std::string_view encoded) const {
  const auto parts = split(encoded, '$');
  if (parts.size() != 4 || parts[0] != kHashScheme) return false;
  unsigned iterations = 0;
  const auto [p, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), iterations);
  if (ec != std::errc{} || p != parts[1].data() + parts[1].size() || iterations == 0) return false;
  const auto salt = crypto::base64url_decode(parts[2]);
  const auto expected = crypto::base64url_decode(parts[3]);
  if (!salt || !expected || expected->empty()) return false;
  const auto derived = crypto::pbkdf2_sha256(plain, *salt, iterations, expected->size());
  return crypto::constant_time_equal(derived, *expected);
}

TokenSigner::TokenSigner(std::string secret) : secret_(std::move(secret)) {
  if (secret_.size() < 16) throw Error(ErrorCode::ConfigInvalid, "session secret must be at least 16 bytes");
}

std::string TokenSigner::sign(const Claims& claims) const {
  nlohmann::ordered_json body;
  body["sub"] = claims.subject;
  body["role"] = claims.role;
  body["iat"] = claims.issued_at;
  body["exp"] = claims.expires_at;
  auto signing_input = crypto::base64url_encode(kTokenHeader) + "." + crypto::base64url_encode(body.dump());
  const auto mac = crypto::hmac_sha256(secret_, signing_input);
  return signing_input + "." + crypto::base64url_encode(mac);
}

std::optional<Claims> TokenSigner::verify(std::string_view token, std::int64_t now_seconds) const {
  const auto parts = split(token, '.');
  if (parts.size() != 3) return std::nullopt;
  const auto mac = crypto::base64url_decode(parts[2]);
  if (!mac) return std::nullopt;
  const auto signing_input = token.substr(0, parts[0].size() + 1 + parts[1].size());
  const auto expected = crypto::hmac_sha256(secret_, signing_input);
  if (!crypto::constant_time_equal(expected, *mac)) return std::nullopt;

  const auto header = crypto::base64url_decode(parts[0]);
  const auto payload = crypto::base64url_decode(parts[1]);
  if (!header || !payload || as_view(*header) != kTokenHeader) return std::nullopt;
  const auto j = Json::parse(as_view(*payload), nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.size() != 4) return std::nullopt;
  const auto sub = j.find("sub");
  const auto role = j.find("role");
  const auto iat = j.find("iat");
  const auto exp = j.find("exp");
  if (sub == j.end() || !sub->is_string() || role == j.end() || !role->is_number_integer() ||
      iat == j.end() || !iat->is_number_integer() || exp == j.end() || !exp->is_number_integer()) {
    return std::nullopt;
  }
  Claims c{sub->get<std::string>(), role->get<int>(), iat->get<std::int64_t>(), exp->get<std::int64_t>()};
  if (c.role != kRoleUser && c.role != kRoleAdmin) return std::nullopt;
  if (now_seconds >= c.expires_at) return std::nullopt;
  return c;
}

std::string normalize_email(std::string_view email) { return text::ascii_lower(text::trim(email)); }

bool is_valid_email(std::string_view email) {
  const auto at = email.find('@');
  if (at == std::string_view::npos || at == 0 || email.find('@', at + 1) != std::string_view::npos) return false;
  const auto domain = email.substr(at + 1);
  if (domain.empty() || domain.find('.') == std::string_view::npos || domain.front() == '.' ||
      domain.back() == '.' || domain.find("..") != std::string_view::npos) {
    return false;
  }
  return std::all_of(email.begin(), email.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u > 0x20 && u < 0x7f;
  });
}

bool domain_allowed(std::string_view email, const std::vector<std::string>& allowed) {
  const auto domain = email.substr(email.find('@') + 1);
  return std::any_of(allowed.begin(), allowed.end(), [&](const std::string& d) {
    const auto want = text::ascii_lower(d);
    return domain == want ||
           (domain.size() > want.size() && domain.ends_with(want) && domain[domain.size() - want.size() - 1] == '.');
  });
}

AuthService::AuthService(store::DocumentStore& store, Mailer& mailer, const Clock& clock, RandomSource& random,
                         reputation::Ledger& ledger, AuthConfig config)
    : store_(store),
      mailer_(mailer),
      clock_(clock),
      random_(random),
      ledger_(ledger),
      config_(std::move(config)),
      hasher_(random_, config_.password_hash_iterations),
      signer_(config_.session_secret) {
  if (config_.otp_ttl_seconds <= 0 || config_.session_ttl_seconds <= 0 || config_.otp_max_attempts <= 0) {
    throw Error(ErrorCode::ConfigInvalid, "otp ttl, session ttl and otp attempts must be positive");
  }
  dummy_hash_ = hasher_.hash("timing-equalizer");
}

std::string AuthService::generate_otp() {
  std::string code;
  for (std::size_t i = 0; i < kOtpDigits; ++i) code.push_back(static_cast<char>('0' + random_.uniform(10)));
  return code;
}

OtpIssued AuthService::register_begin(const RegistrationForm& form) {
  const auto email = normalize_email(form.email);
  if (!is_valid_email(email)) throw Error(ErrorCode::ValidationFailed, "email is not a valid address", "email");
  if (!domain_allowed(email, config_.allowed_email_domains)) {
    throw Error(ErrorCode::DomainNotAllowed, "email domain is not an allowed campus domain", "email");
  }
  if (form.password.size() < kMinPasswordLength) {
    throw Error(ErrorCode::WeakPassword, "password must be at least 8 characters", "password");
  }
  const auto name = text::trim(form.name);
  require_text(name, "name", 120);
  const auto phone = text::trim(form.phone);
  require_text(phone, "phone", 32);
  const auto college_id = text::trim(form.college_id);
  require_text(college_id, "collegeId", 64);
  if (find_by_email(email)) throw Error(ErrorCode::EmailTaken, "an account already exists for this email", "email");

  const auto code = generate_otp();
  const auto now = clock_.now();
  // Only the hash is held until verification.
  Json pending = {{"name", name},
                  {"phone", phone},
                  {"collegeId", college_id},
                  {"password", hasher_.hash(form.password)}};
  store_.put(kOtps, {email,
                     {{"email", email},
                      {"otp", code},
                      {"createdAt", now},
                      {"consumed", false},
                      {"attempts", 0},
                      {"pendingProfile", pending}}});
  mailer_.send(email, "Your verification code",
               "Use this code to verify your campus email:\n" + code + "\nIt expires in " +
                   std::to_string(config_.otp_ttl_seconds / 60) + " minutes.\n");
  return {email, now + config_.otp_ttl_seconds * kMillisPerSecond};
}

UserAccount AuthService::verify_otp(std::string_view raw_email, std::string_view code) {
  const auto email = normalize_email(raw_email);
  Json profile;
  for (;;) {
    const auto doc = store_.get(kOtps, email);
    if (!doc) throw Error(ErrorCode::OtpNotFound, "no verification code was issued for this email");
    auto body = doc->body;
    if (body.at("consumed").get<bool>()) {
      throw Error(ErrorCode::OtpAlreadyConsumed, "verification code was already used");
    }
    const int attempts = body.at("attempts").get<int>();
    if (attempts >= config_.otp_max_attempts) {
      throw Error(ErrorCode::OtpLocked, "too many attempts; request a new code");
    }
    if (clock_.now() - body.at("createdAt").get<Timestamp>() > config_.otp_ttl_seconds * kMillisPerSecond) {
      throw Error(ErrorCode::OtpExpired, "verification code expired");
    }
    const auto stored = body.at("otp").get<std::string>();
    if (!crypto::constant_time_equal(crypto::as_bytes(stored), crypto::as_bytes(code))) {
      body["attempts"] = attempts + 1;
      if (store_.compare_and_set(kOtps, email, doc->version, body).status == store::CasStatus::VersionConflict) {
        continue;
      }
      throw Error(ErrorCode::OtpMismatch, "verification code does not match");
    }
    profile = body.at("pendingProfile");
    body["consumed"] = true;
    body.erase("pendingProfile");
    const auto cas = store_.compare_and_set(kOtps, email, doc->version, body);
    if (cas.status == store::CasStatus::VersionConflict) continue;
    if (!cas.ok()) throw Error(ErrorCode::OtpNotFound, "no verification code was issued for this email");
    break;
  }

  std::lock_guard lock(account_creation_);
  if (find_by_email(email)) throw Error(ErrorCode::EmailTaken, "an account already exists for this email", "email");
  UserAccount user;
  user.name = profile.at("name").get<std::string>();
  user.email = email;
  user.password_hash = profile.at("password").get<std::string>();
  user.phone = profile.at("phone").get<std::string>();
  user.college_id = profile.at("collegeId").get<std::string>();
  user.role = kRoleUser;
  user.created_at = user.updated_at = clock_.now();
  const auto stored = store_.put(kUsers, {"", user.to_json()});
  user.id = stored.id;
  ledger_.init_account(user.id);
  return user;
}

std::string AuthService::login(std::string_view raw_email, std::string_view password) {
  const auto user = find_by_email(normalize_email(raw_email));
  if (!user) {
    hasher_.verify(password, dummy_hash_);
    throw Error(ErrorCode::InvalidCredentials, "invalid email or password");
  }
  if (!hasher_.verify(password, user->password_hash)) {
    throw Error(ErrorCode::InvalidCredentials, "invalid email or password");
  }
  const auto now = clock_.now() / kMillisPerSecond;
  return signer_.sign({user->id, user->role, now, now + config_.session_ttl_seconds});
}

Claims AuthService::verify_token(std::string_view token) const {
  auto claims = signer_.verify(token, clock_.now() / kMillisPerSecond);
  if (!claims) throw Error(ErrorCode::Unauthenticated, "missing, invalid or expired session token");
  return *claims;
}

std::optional<UserAccount> AuthService::find_by_email(std::string_view email) const {
  store::Query q;
  q.where = [&](const Json& b) { return b.value("email", "") == email; };
  q.limit = 1;
  auto docs = store_.query(kUsers, q);
  if (docs.empty()) return std::nullopt;
  return UserAccount::from_document(docs.front());
}

std::optional<UserAccount> AuthService::find_by_id(std::string_view id) const {
  auto doc = store_.get(kUsers, id);
  if (!doc) return std::nullopt;
  return UserAccount::from_document(*doc);
}

UserAccount AuthService::set_role(std::string_view raw_email, int role) {
  if (role != kRoleUser && role != kRoleAdmin) throw Error(ErrorCode::ValidationFailed, "role must be 0 or 1", "role");
  const auto email = normalize_email(raw_email);
  for (;;) {
    auto user = find_by_email(email);
    if (!user) throw Error(ErrorCode::UnknownAccount, "no account for " + email);
    if (user->role == role) return *user;
    const auto doc = store_.get(kUsers, user->id);
    if (!doc) continue;
    auto body = doc->body;
    body["role"] = role;
    body["updatedAt"] = clock_.now();
    if (store_.compare_and_set(kUsers, user->id, doc->version, body).ok()) {
      user->role = role;
      return *user;
    }
  }
}

}  // namespace market::auth
