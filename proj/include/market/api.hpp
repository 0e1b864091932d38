#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "market/app.hpp"
#include "market/auth.hpp"
#include "market/error.hpp"

namespace market::api {

using Json = nlohmann::json;

inline constexpr std::size_t kMaxBodyBytes = 3 * 1024 * 1024;
inline constexpr std::size_t kDefaultPageSize = 20;
inline constexpr std::size_t kMaxPageSize = 100;
inline constexpr std::size_t kWorkerThreads = 64;

struct FormPart {
  std::string content;
  std::string content_type;
  std::string filename;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;  // keys lowercased
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, FormPart> form;  // multipart fields and files

  std::optional<std::string> header(std::string_view name) const;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;

  static HttpResponse json(int status, const Json& body);
  Json json_body() const;
};

struct ApiError {
  int status;
  std::string_view code;
};

// Total over ErrorCode: every module error has exactly one wire mapping.
ApiError map_error(ErrorCode code) noexcept;
HttpResponse error_response(int status, std::string_view code, std::string_view message);

struct RouteInfo {
  std::string method;
  std::string pattern;  // e.g. "/products/{id}"
  bool requires_auth;
};

// Bearer token -> claims. Throws Unauthenticated.
auth::Claims authenticate(const HttpRequest& request, const auth::AuthService& auth);

class Router {
 public:
  explicit Router(App& app);

  HttpResponse handle(const HttpRequest& request) const;
  std::vector<RouteInfo> routes() const;

 private:
  using Params = std::vector<std::string>;
  using Handler = std::function<HttpResponse(const HttpRequest&, const Params&, const std::optional<auth::Claims>&)>;

  struct Route {
    RouteInfo info;
    std::regex regex;
    Handler handler;
  };

  void add(std::string method, std::string pattern, bool requires_auth, Handler handler);
  HttpResponse healthz() const;

  App& app_;
  std::vector<Route> routes_;
};

// cpp-httplib front end for a Router.
class HttpServer {
 public:
  HttpServer(const Router& router, std::string cors_allow_origin = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // port 0 binds an ephemeral port. Returns the bound port or nullopt.
  std::optional<int> bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // Runs listen() on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// "host:port" -> (host, port).
std::optional<std::pair<std::string, int>> parse_bind_address(std::string_view address);

}  // namespace market::api
