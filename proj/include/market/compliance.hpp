#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace market::compliance {

struct Photo {
  std::string media_type;
  std::vector<std::uint8_t> bytes;
};

struct ComplianceRequest {
  std::string name;
  std::string description;
  std::string category_name;
  std::optional<Photo> photo;
};

struct ComplianceVerdict {
  bool compliant = false;
  std::string reason;  // non-empty whenever compliant is false
  int classifier_calls = 0;
};

inline constexpr std::string_view kClassifierUnavailable = "classifier-unavailable";

// Lowercase, every non-alphanumeric code point becomes a space, runs of
// spaces collapse, ends trimmed. Malformed UTF-8 bytes count as separators.
std::string normalize_text(std::string_view text);

class BlacklistConfig {
 public:
  BlacklistConfig() = default;
  // Terms are normalized; each must be a single non-empty token.
  static BlacklistConfig from_terms(const std::vector<std::string>& terms);
  // One term per line, '#' comment lines, blank lines ignored.
  static BlacklistConfig parse(std::string_view file_text);
  static BlacklistConfig load(const std::filesystem::path& path);

  bool contains(std::string_view normalized_token) const;
  const std::set<std::string, std::less<>>& terms() const noexcept { return terms_; }

 private:
  std::set<std::string, std::less<>> terms_;
};

// First blacklisted term occurring as a whole word, in text order.
std::optional<std::string> check_blacklist(std::string_view text, const BlacklistConfig& config);

struct TextPart {
  std::string text;
};
struct ImagePart {
  std::string media_type;
  std::vector<std::uint8_t> bytes;
};
using Part = std::variant<TextPart, ImagePart>;

// Transport-level failure (timeout, connection, missing fixture).
class ClassifierError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ClassifierClient {
 public:
  virtual ~ClassifierClient() = default;
  // Raw model output. May throw ClassifierError.
  virtual std::string classify(std::string_view system_prompt, const std::vector<Part>& parts,
                               std::chrono::milliseconds timeout) = 0;
};

// Text part sent for a listing; also the mock's fingerprint input.
std::string listing_text(const ComplianceRequest& request);
std::vector<Part> build_parts(const ComplianceRequest& request);

// Canned responses keyed by sha256 of the request's text parts.
class MockClassifier final : public ClassifierClient {
 public:
  static std::string fingerprint(const ComplianceRequest& request);
  static std::string fingerprint(const std::vector<Part>& parts);

  void add(const std::string& fingerprint, std::string response);
  void add(const ComplianceRequest& request, std::string response);
  // Response for unknown fingerprints; without one they raise ClassifierError.
  void set_default(std::optional<std::string> response);

  std::string classify(std::string_view system_prompt, const std::vector<Part>& parts,
                       std::chrono::milliseconds timeout) override;

  std::uint64_t calls() const noexcept { return calls_.load(); }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> responses_;
  std::optional<std::string> default_;
  std::atomic<std::uint64_t> calls_{0};
};

struct RawVerdict {
  bool compliant = false;
  std::optional<std::string> reason;
};

// Exact schema {"compliant": bool, "reason": string iff false}; any other
// shape, extra field, or empty reason is rejected.
std::optional<RawVerdict> parse_verdict(std::string_view raw);

struct ClassifierSettings {
  std::string system_prompt;
  std::chrono::milliseconds timeout{10'000};
};

// One retry on a failed or malformed response, then fail closed.
ComplianceVerdict classify(const ComplianceRequest& request, ClassifierClient& client,
                           const ClassifierSettings& settings);

// Blacklist over name + description + category first; the classifier is only
// consulted when no term matches. Never throws.
ComplianceVerdict check_compliance(const ComplianceRequest& request, const BlacklistConfig& config,
                                   ClassifierClient& client, const ClassifierSettings& settings);

struct CorpusFixture {
  std::string id;
  std::size_t line = 0;
  ComplianceRequest request;
  bool expect_compliant = false;
  std::optional<std::string> expect_reason_substring;
  std::optional<std::string> mock_response;
};

// JSON-lines corpus. Throws std::runtime_error naming the offending line.
std::vector<CorpusFixture> parse_corpus(std::string_view text);
std::vector<CorpusFixture> load_corpus(const std::filesystem::path& path);
void register_fixtures(MockClassifier& mock, const std::vector<CorpusFixture>& fixtures);

}  // namespace market::compliance
