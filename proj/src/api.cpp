#include "market/api.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <thread>

#include "httplib.h"
#include "market/text.hpp"

namespace market::api {
namespace {

std::string lower_ascii(std::string_view s) { return text::ascii_lower(s); }

template <class Int>
Int parse_int(std::string_view raw, std::string_view field) {
  Int value{};
  const auto s = text::trim(raw);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
    throw Error(ErrorCode::ValidationFailed, std::string(field) + " must be an integer", std::string(field));
  }
  return value;
}

std::optional<std::string> query_param(const HttpRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::pair<std::size_t, std::size_t> page(const HttpRequest& r) {
  std::size_t limit = kDefaultPageSize;
  std::size_t offset = 0;
  if (auto v = query_param(r, "limit")) limit = std::clamp<std::size_t>(parse_int<std::size_t>(*v, "limit"), 1, kMaxPageSize);
  if (auto v = query_param(r, "offset")) offset = parse_int<std::size_t>(*v, "offset");
  return {limit, offset};
}

template <class T>
std::vector<T> slice(std::vector<T> items, std::pair<std::size_t, std::size_t> pg) {
  const auto [limit, offset] = pg;
  if (offset >= items.size()) return {};
  const auto end = std::min(items.size(), offset + limit);
  return std::vector<T>(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(offset)),
                        std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(end)));
}

Json parse_json_body(const HttpRequest& r) {
  auto j = Json::parse(r.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedBody, "request body must be a JSON object");
  return j;
}

std::string string_field(const Json& j, const char* key, bool required = true) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw Error(ErrorCode::MalformedBody, std::string("missing field '") + key + "'", key);
    return {};
  }
  if (!it->is_string()) throw Error(ErrorCode::MalformedBody, std::string("field '") + key + "' must be a string", key);
  return it->get<std::string>();
}

Json user_json(const auth::UserAccount& u) {
  return {{"id", u.id}, {"name", u.name}, {"email", u.email}, {"role", u.role}};
}

Json request_with_product(const transactions::PurchaseRequest& r) {
  auto j = r.to_json();
  j["product"] = r.product_summary();
  return j;
}

bool parse_bool(std::string_view raw) {
  const auto v = lower_ascii(text::trim(raw));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
  throw Error(ErrorCode::ValidationFailed, "shipping must be a boolean", "shipping");
}

catalog::ListingDraft draft_from_request(const HttpRequest& r) {
  catalog::ListingDraft d;
  if (!r.form.empty()) {
    auto field = [&](const char* key) -> std::optional<std::string> {
      auto it = r.form.find(key);
      if (it == r.form.end()) return std::nullopt;
      return it->second.content;
    };
    d.name = field("name").value_or("");
    d.description = field("description").value_or("");
    const auto price = field("price");
    if (!price) throw Error(ErrorCode::ValidationFailed, "price is required", "price");
    d.price = parse_int<pricing::Money>(*price, "price");
    d.category_id = field("category").value_or("");
    if (auto q = field("quantity")) d.quantity = parse_int<int>(*q, "quantity");
    if (auto s = field("shipping")) d.shipping = parse_bool(*s);
    if (auto it = r.form.find("photo"); it != r.form.end() && !it->second.content.empty()) {
      d.photo = compliance::Photo{lower_ascii(it->second.content_type),
                                  std::vector<std::uint8_t>(it->second.content.begin(), it->second.content.end())};
    }
    return d;
  }
  const auto j = parse_json_body(r);
  d.name = string_field(j, "name");
  d.description = string_field(j, "description", false);
  const auto price = j.find("price");
  if (price == j.end() || !price->is_number_integer()) {
    throw Error(ErrorCode::ValidationFailed, "price must be an integer amount in minor units", "price");
  }
  d.price = price->get<pricing::Money>();
  d.category_id = string_field(j, "category");
  if (auto q = j.find("quantity"); q != j.end()) {
    if (!q->is_number_integer()) throw Error(ErrorCode::ValidationFailed, "quantity must be an integer", "quantity");
    d.quantity = q->get<int>();
  }
  if (auto s = j.find("shipping"); s != j.end()) {
    if (!s->is_boolean()) throw Error(ErrorCode::ValidationFailed, "shipping must be a boolean", "shipping");
    d.shipping = s->get<bool>();
  }
  return d;
}

std::string to_regex(const std::string& pattern) {
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] == '{') {
      i = pattern.find('}', i) + 1;
      out += "([^/]+)";
    } else {
      out.push_back(pattern[i++]);
    }
  }
  return out;
}

}  // namespace

std::optional<std::string> HttpRequest::header(std::string_view name) const {
  auto it = headers.find(lower_ascii(name));
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

HttpResponse HttpResponse::json(int status, const Json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump(-1, ' ', false, Json::error_handler_t::replace);
  return r;
}

Json HttpResponse::json_body() const { return Json::parse(body, nullptr, false); }

ApiError map_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ValidationFailed: return {400, "validation_failed"};
    case ErrorCode::MalformedBody: return {400, "malformed_body"};
    case ErrorCode::WeakPassword: return {400, "weak_password"};
    case ErrorCode::DomainNotAllowed: return {400, "domain_not_allowed"};
    case ErrorCode::EmailTaken: return {409, "email_taken"};
    case ErrorCode::OtpMismatch: return {400, "otp_mismatch"};
    case ErrorCode::OtpExpired: return {400, "otp_expired"};
    case ErrorCode::OtpNotFound: return {404, "otp_not_found"};
    case ErrorCode::OtpAlreadyConsumed: return {409, "otp_already_consumed"};
    case ErrorCode::OtpLocked: return {429, "otp_locked"};
    case ErrorCode::InvalidCredentials: return {401, "invalid_credentials"};
    case ErrorCode::Unauthenticated: return {401, "unauthenticated"};
    case ErrorCode::Unauthorized: return {403, "unauthorized"};
    case ErrorCode::NotFound: return {404, "not_found"};
    case ErrorCode::UnknownCategory: return {400, "unknown_category"};
    case ErrorCode::NonCompliant: return {422, "non_compliant"};
    case ErrorCode::AlreadyReserved: return {409, "already_reserved"};
    case ErrorCode::SelfRequestForbidden: return {403, "self_request_forbidden"};
    case ErrorCode::ReservedCannotDelete: return {409, "reserved_cannot_delete"};
    case ErrorCode::AlreadyResolved: return {409, "already_resolved"};
    case ErrorCode::AccountExists: return {409, "account_exists"};
    case ErrorCode::UnknownAccount: return {404, "unknown_account"};
    case ErrorCode::WrongTiming: return {400, "wrong_timing"};
    case ErrorCode::NothingPending: return {409, "nothing_pending"};
    case ErrorCode::VersionConflict: return {409, "version_conflict"};
    case ErrorCode::StoreUnavailable: return {503, "store_unavailable"};
    case ErrorCode::ConfigInvalid: return {503, "config_invalid"};
  }
  return {500, "internal"};
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  return HttpResponse::json(status, {{"code", code}, {"message", message}});
}

auth::Claims authenticate(const HttpRequest& request, const auth::AuthService& auth) {
  const auto header = request.header("authorization");
  constexpr std::string_view kBearer = "bearer ";
  if (!header || header->size() <= kBearer.size() || lower_ascii(header->substr(0, kBearer.size())) != kBearer) {
    throw Error(ErrorCode::Unauthenticated, "missing bearer token");
  }
  return auth.verify_token(text::trim(header->substr(kBearer.size())));
}

Router::Router(App& app) : app_(app) {
  using Claims = std::optional<auth::Claims>;

  add("GET", "/healthz", false, [this](const HttpRequest&, const Params&, const Claims&) { return healthz(); });

  add("POST", "/auth/register", false, [this](const HttpRequest& r, const Params&, const Claims&) {
    const auto j = parse_json_body(r);
    const auto issued = app_.auth().register_begin({string_field(j, "name"), string_field(j, "email"),
                                                    string_field(j, "phone"), string_field(j, "collegeId"),
                                                    string_field(j, "password")});
    return HttpResponse::json(200, {{"status", "otp_sent"}, {"email", issued.email}, {"expiresAt", issued.expires_at}});
  });

  add("POST", "/auth/verify-otp", false, [this](const HttpRequest& r, const Params&, const Claims&) {
    const auto j = parse_json_body(r);
    const auto user = app_.auth().verify_otp(string_field(j, "email"), string_field(j, "code"));
    return HttpResponse::json(200, {{"user", user_json(user)}});
  });

  add("POST", "/auth/login", false, [this](const HttpRequest& r, const Params&, const Claims&) {
    const auto j = parse_json_body(r);
    const auto token = app_.auth().login(string_field(j, "email"), string_field(j, "password"));
    const auto claims = app_.auth().verify_token(token);
    const auto user = app_.auth().find_by_id(claims.subject);
    return HttpResponse::json(200, {{"token", token}, {"expiresAt", claims.expires_at}, {"user", user_json(*user)}});
  });

  add("GET", "/products", true, [this](const HttpRequest& r, const Params&, const Claims&) {
    catalog::SearchQuery q;
    q.text = query_param(r, "q").value_or("");
    q.category_id = query_param(r, "category");
    if (auto v = query_param(r, "min_price")) q.min_price = parse_int<pricing::Money>(*v, "min_price");
    if (auto v = query_param(r, "max_price")) q.max_price = parse_int<pricing::Money>(*v, "max_price");
    const auto pg = page(r);
    Json arr = Json::array();
    for (const auto& s : slice(app_.catalog().search(q), pg)) arr.push_back(s.to_json());
    return HttpResponse::json(200, arr);
  });

  add("POST", "/products", true, [this](const HttpRequest& r, const Params&, const Claims& claims) {
    const auto listing = app_.catalog().create_listing(*claims, draft_from_request(r));
    return HttpResponse::json(201, app_.catalog().get_listing(listing.id).to_json());
  });

  add("GET", "/products/{id}", true, [this](const HttpRequest&, const Params& p, const Claims&) {
    return HttpResponse::json(200, app_.catalog().get_listing(p[0]).to_json());
  });

  add("GET", "/products/{id}/photo", true, [this](const HttpRequest&, const Params& p, const Claims&) {
    auto photo = app_.catalog().photo(p[0]);
    HttpResponse res;
    res.content_type = photo.media_type;
    res.body.assign(photo.bytes.begin(), photo.bytes.end());
    return res;
  });

  add("DELETE", "/products/{id}", true, [this](const HttpRequest&, const Params& p, const Claims& claims) {
    app_.catalog().delete_listing(*claims, p[0]);
    return HttpResponse::json(200, {{"deleted", p[0]}});
  });

  add("POST", "/products/{id}/request", true, [this](const HttpRequest&, const Params& p, const Claims& claims) {
    const auto [request, contacts] = app_.transactions().request_product(*claims, p[0]);
    return HttpResponse::json(200, {{"request", request.to_json()}, {"contacts", contacts.to_json()}});
  });

  add("POST", "/requests/{id}/resolve", true, [this](const HttpRequest& r, const Params& p, const Claims& claims) {
    const auto j = parse_json_body(r);
    const auto outcome = transactions::parse_outcome(string_field(j, "outcome"));
    if (!outcome) {
      throw Error(ErrorCode::ValidationFailed, "outcome must be sold, pending or declined", "outcome");
    }
    const auto request = app_.transactions().resolve(*claims, p[0], *outcome);
    return HttpResponse::json(200, {{"request", request.to_json()}});
  });

  add("GET", "/me/requests", true, [this](const HttpRequest& r, const Params&, const Claims& claims) {
    Json arr = Json::array();
    for (const auto& req : slice(app_.transactions().my_requests(*claims), page(r))) arr.push_back(request_with_product(req));
    return HttpResponse::json(200, arr);
  });

  add("GET", "/me/prompts", true, [this](const HttpRequest& r, const Params&, const Claims& claims) {
    Json arr = Json::array();
    for (const auto& req : slice(app_.transactions().pending_prompts(*claims), page(r))) {
      arr.push_back({{"request", req.to_json()}, {"product", req.product_summary()}});
    }
    return HttpResponse::json(200, arr);
  });

  add("GET", "/me/reputation", true, [this](const HttpRequest&, const Params&, const Claims& claims) {
    const auto acct = app_.ledger().account(claims->subject);
    if (!acct) throw Error(ErrorCode::UnknownAccount, "no reputation account");
    Json pending = Json::object();
    for (const auto& [listing, mods] : acct->pending) {
      reputation::Points sum = 0;
      for (const auto& m : mods) sum += m.magnitude;
      pending[listing] = sum;
    }
    return HttpResponse::json(200, {{"userId", acct->user_id},
                                    {"credited", acct->credited},
                                    {"pending", pending},
                                    {"pendingTotal", acct->pending_total()},
                                    {"boost", app_.ledger().search_boost(acct->credited)}});
  });

  add("GET", "/categories", true, [this](const HttpRequest&, const Params&, const Claims&) {
    Json arr = Json::array();
    for (const auto& c : app_.catalog().list_categories()) arr.push_back({{"id", c.id}, {"name", c.name}});
    return HttpResponse::json(200, arr);
  });
}

void Router::add(std::string method, std::string pattern, bool requires_auth, Handler handler) {
  std::regex re(to_regex(pattern));
  routes_.push_back({{std::move(method), std::move(pattern), requires_auth}, std::move(re), std::move(handler)});
}

std::vector<RouteInfo> Router::routes() const {
  std::vector<RouteInfo> out;
  for (const auto& r : routes_) out.push_back(r.info);
  return out;
}

HttpResponse Router::healthz() const {
  const bool ok = app_.store().healthy();
  return HttpResponse::json(ok ? 200 : 503,
                            {{"status", ok ? "ok" : "unavailable"}, {"version", kVersion}, {"store", ok ? "ok" : "unavailable"}});
}

HttpResponse Router::handle(const HttpRequest& request) const {
  std::vector<std::string> allowed;
  for (const auto& route : routes_) {
    std::smatch m;
    if (!std::regex_match(request.path, m, route.regex)) continue;
    if (route.info.method != request.method) {
      allowed.push_back(route.info.method);
      continue;
    }
    try {
      std::optional<auth::Claims> claims;
      if (route.info.requires_auth) claims = authenticate(request, app_.auth());
      Params params;
      for (std::size_t i = 1; i < m.size(); ++i) params.push_back(m[i].str());
      return route.handler(request, params, claims);
    } catch (const Error& e) {
      const auto mapped = map_error(e.code());
      auto res = error_response(mapped.status, mapped.code, e.what());
      if (!e.field().empty()) {
        auto body = res.json_body();
        body["field"] = e.field();
        res = HttpResponse::json(mapped.status, body);
      }
      return res;
    } catch (const Json::exception& e) {
      return error_response(400, "malformed_body", e.what());
    } catch (const std::exception& e) {
      return error_response(500, "internal", e.what());
    }
  }
  if (!allowed.empty()) {
    std::string allow;
    for (const auto& m : allowed) allow += (allow.empty() ? "" : ", ") + m;
    auto res = error_response(405, "method_not_allowed", "method not allowed for " + request.path);
    res.headers["Allow"] = allow;
    return res;
  }
  return error_response(404, "route_not_found", "no route for " + request.path);
}

std::optional<std::pair<std::string, int>> parse_bind_address(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  int port = 0;
  const auto digits = address.substr(colon + 1);
  const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (digits.empty() || ec != std::errc{} || p != digits.data() + digits.size() || port < 0 || port > 65535) {
    return std::nullopt;
  }
  return std::make_pair(std::string(address.substr(0, colon)), port);
}

struct HttpServer::Impl {
  const Router& router;
  std::string cors;
  httplib::Server server;
  std::thread thread;

  Impl(const Router& r, std::string c) : router(r), cors(std::move(c)) {}

  void handle(const httplib::Request& req, httplib::Response& res) const {
    if (!cors.empty()) {
      res.set_header("Access-Control-Allow-Origin", cors);
      if (req.method == "OPTIONS") {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
        res.status = 204;
        return;
      }
    }
    HttpRequest in;
    in.method = req.method == "HEAD" ? "GET" : req.method;
    in.path = req.path;
    for (const auto& [k, v] : req.headers) in.headers.emplace(lower_ascii(k), v);
    for (const auto& [k, v] : req.params) in.query.emplace(k, v);
    in.body = req.body;
    for (const auto& [k, f] : req.files) in.form.emplace(k, FormPart{f.content, f.content_type, f.filename});
    const auto out = router.handle(in);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_content(out.body, out.content_type);
  }
};

HttpServer::HttpServer(const Router& router, std::string cors_allow_origin)
    : impl_(std::make_unique<Impl>(router, std::move(cors_allow_origin))) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) { impl_->handle(req, res); };
  auto& s = impl_->server;
  s.set_payload_max_length(kMaxBodyBytes);
  // Idle keep-alive connections each hold a worker, so the default pool of
  // about eight starves under a burst of clients.
  s.new_task_queue = [] { return new httplib::ThreadPool(kWorkerThreads); };
  s.set_keep_alive_timeout(1);
  // httplib's default also sets SO_REUSEPORT, which lets a second server share an occupied port.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  s.Get(".*", handler);
  s.Post(".*", handler);
  s.Put(".*", handler);
  s.Patch(".*", handler);
  s.Delete(".*", handler);
  s.Options(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

std::optional<int> HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) return std::nullopt;
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) return std::nullopt;
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace market::api
