#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "market/auth.hpp"
#include "market/reputation.hpp"

namespace market {

struct ClassifierOptions {
  std::string mode = "mock";  // only "mock" ships
  std::string endpoint;
  std::filesystem::path fixture_path;  // JSON-lines, same shape as the compliance corpus
  std::optional<std::string> default_response;
  std::filesystem::path system_prompt_path;
  std::chrono::milliseconds timeout{10'000};
};

struct PriceSourceOptions {
  std::string mode = "mock";
  std::filesystem::path fixture_path;
};

// Service configuration. Loaded from a JSON file; relative paths resolve
// against the file's directory.
struct Config {
  auth::AuthConfig auth;
  reputation::ReputationConfig reputation;
  std::filesystem::path blacklist_path;
  ClassifierOptions classifier;
  PriceSourceOptions price_source;
  std::filesystem::path data_dir;  // empty: in-memory store
  std::string bind_address = "127.0.0.1:8080";
  std::optional<std::filesystem::path> mail_capture_path;
  std::string cors_allow_origin;

  // Throws Error(ConfigInvalid).
  static Config from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static Config load(const std::filesystem::path& path);
};

}  // namespace market
