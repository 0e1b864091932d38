#include "market/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "market/error.hpp"
#include "market/store.hpp"

namespace market {
namespace {

using Json = nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::ConfigInvalid, std::string("config key '") + key + "' has the wrong type");
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::ConfigInvalid, "unknown config key '" + where + key + "'");
  }
}

}  // namespace

Config Config::from_json(const Json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  reject_unknown(j,
                 {"allowed_email_domains", "otp_ttl_seconds", "otp_max_attempts", "session_ttl_seconds",
                  "session_secret", "password_hash_iterations", "modifiers", "initial_points", "boost_alpha",
                  "boost_cap", "blacklist_path", "classifier", "price_source", "data_dir", "bind_address",
                  "mail_capture_path", "cors_allow_origin"},
                 "");
  Config c;
  c.auth.allowed_email_domains = get_or(j, "allowed_email_domains", std::vector<std::string>{});
  if (c.auth.allowed_email_domains.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "allowed_email_domains must list at least one domain");
  }
  c.auth.otp_ttl_seconds = get_or(j, "otp_ttl_seconds", c.auth.otp_ttl_seconds);
  c.auth.otp_max_attempts = get_or(j, "otp_max_attempts", c.auth.otp_max_attempts);
  c.auth.session_ttl_seconds = get_or(j, "session_ttl_seconds", c.auth.session_ttl_seconds);
  c.auth.session_secret = get_or(j, "session_secret", std::string{});
  c.auth.password_hash_iterations = get_or(j, "password_hash_iterations", c.auth.password_hash_iterations);

  if (const auto it = j.find("modifiers"); it != j.end()) {
    if (!it->is_object()) throw Error(ErrorCode::ConfigInvalid, "modifiers must be an object");
    for (const auto& [name, value] : it->items()) {
      const auto kind = reputation::parse_modifier_kind(name);
      if (!kind || !value.is_number_integer()) {
        throw Error(ErrorCode::ConfigInvalid, "bad modifier entry '" + name + "'");
      }
      const auto v = value.get<reputation::Points>();
      auto& t = c.reputation.table;
      switch (*kind) {
        case reputation::ModifierKind::TransactionCompleted: t.transaction_completed = v; break;
        case reputation::ModifierKind::FreeListing: t.free_listing = v; break;
        case reputation::ModifierKind::EconomicalListing: t.economical_listing = v; break;
        case reputation::ModifierKind::NonCompliantListing: t.non_compliant_listing = v; break;
        case reputation::ModifierKind::TosViolation: t.tos_violation = v; break;
      }
    }
    c.reputation.table.validate();
  }
  c.reputation.initial_points = get_or(j, "initial_points", c.reputation.initial_points);
  c.reputation.boost_alpha = get_or(j, "boost_alpha", c.reputation.boost_alpha);
  c.reputation.boost_cap = get_or(j, "boost_cap", c.reputation.boost_cap);

  c.blacklist_path = resolve(base, get_or(j, "blacklist_path", std::string{}));

  const auto classifier = get_or(j, "classifier", Json::object());
  reject_unknown(classifier, {"mode", "endpoint", "fixture_path", "default_response", "system_prompt_path", "timeout_ms"},
                 "classifier.");
  c.classifier.mode = get_or(classifier, "mode", c.classifier.mode);
  c.classifier.endpoint = get_or(classifier, "endpoint", std::string{});
  c.classifier.fixture_path = resolve(base, get_or(classifier, "fixture_path", std::string{}));
  if (const auto it = classifier.find("default_response"); it != classifier.end() && !it->is_null()) {
    c.classifier.default_response = it->is_string() ? it->get<std::string>() : it->dump();
  }
  c.classifier.system_prompt_path = resolve(base, get_or(classifier, "system_prompt_path", std::string{}));
  c.classifier.timeout = std::chrono::milliseconds(get_or(classifier, "timeout_ms", std::int64_t{10'000}));

  const auto price = get_or(j, "price_source", Json::object());
  reject_unknown(price, {"mode", "fixture_path"}, "price_source.");
  c.price_source.mode = get_or(price, "mode", c.price_source.mode);
  c.price_source.fixture_path = resolve(base, get_or(price, "fixture_path", std::string{}));

  auto data_dir = get_or(j, "data_dir", std::string{});
  if (data_dir.empty()) {
    if (const char* env = std::getenv(store::kDataDirEnv)) data_dir = env;
  }
  c.data_dir = resolve(base, data_dir);
  c.bind_address = get_or(j, "bind_address", c.bind_address);
  if (auto mail = get_or(j, "mail_capture_path", std::string{}); !mail.empty()) {
    c.mail_capture_path = resolve(base, mail);
  }
  c.cors_allow_origin = get_or(j, "cors_allow_origin", std::string{});
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config file " + path.string());
  const auto j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigInvalid, "config file is not valid JSON: " + path.string());
  return from_json(j, std::filesystem::absolute(path).parent_path());
}

}  // namespace market
