#include "market/compliance.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "market/crypto.hpp"
#include "market/error.hpp"
#include "market/text.hpp"

namespace market::compliance {
namespace {

using Json = nlohmann::json;

// Approximates Unicode L*/N* without a property table: ASCII alnum plus
// non-ASCII letters, minus the punctuation, symbol and emoji blocks.
bool is_word_char(char32_t c) {
  if (c == text::kInvalidCodePoint) return false;
  if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  if (c < 0xC0 || c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c >= 0xE000 && c <= 0xF8FF) return false;
  if (c >= 0xFE30 && c <= 0xFE4F) return false;
  if ((c >= 0xFF00 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) ||
      (c >= 0xFF5B && c <= 0xFF65)) {
    return false;
  }
  if (c >= 0xFFF0 && c <= 0xFFFF) return false;
  if (c >= 0x1F000 && c <= 0x1FAFF) return false;
  return true;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string normalize_text(std::string_view input) {
  std::string out;
  out.reserve(input.size());
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < input.size()) {
    const auto cp = text::decode_utf8(input, pos);
    if (!is_word_char(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    text::append_utf8(out, text::to_lower(cp));
  }
  return out;
}

BlacklistConfig BlacklistConfig::from_terms(const std::vector<std::string>& terms) {
  BlacklistConfig cfg;
  for (const auto& raw : terms) {
    auto term = normalize_text(raw);
    if (term.empty() || term.find(' ') != std::string::npos) {
      throw Error(ErrorCode::ConfigInvalid, "blacklist term must be a single word: \"" + raw + "\"");
    }
    cfg.terms_.insert(std::move(term));
  }
  return cfg;
}

BlacklistConfig BlacklistConfig::parse(std::string_view file_text) {
  std::vector<std::string> terms;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= file_text.size()) {
    auto end = file_text.find('\n', start);
    if (end == std::string_view::npos) end = file_text.size();
    ++line_no;
    const auto line = text::trim(file_text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (!text::is_valid_utf8(line)) {
      throw Error(ErrorCode::ConfigInvalid, "blacklist line " + std::to_string(line_no) + " is not UTF-8");
    }
    terms.push_back(line);
  }
  return from_terms(terms);
}

BlacklistConfig BlacklistConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

bool BlacklistConfig::contains(std::string_view normalized_token) const {
  return terms_.find(normalized_token) != terms_.end();
}

std::optional<std::string> check_blacklist(std::string_view input, const BlacklistConfig& config) {
  if (config.terms().empty()) return std::nullopt;
  const auto normalized = normalize_text(input);
  std::size_t start = 0;
  while (start < normalized.size()) {
    auto end = normalized.find(' ', start);
    if (end == std::string::npos) end = normalized.size();
    const std::string_view word(normalized.data() + start, end - start);
    if (config.contains(word)) return std::string(word);
    start = end + 1;
  }
  return std::nullopt;
}

std::string listing_text(const ComplianceRequest& request) {
  return "Name: " + request.name + "\nDescription: " + request.description + "\nCategory: " + request.category_name;
}

std::vector<Part> build_parts(const ComplianceRequest& request) {
  std::vector<Part> parts{TextPart{listing_text(request)}};
  if (request.photo) parts.emplace_back(ImagePart{request.photo->media_type, request.photo->bytes});
  return parts;
}

std::string MockClassifier::fingerprint(const std::vector<Part>& parts) {
  std::string joined;
  for (const auto& p : parts) {
    if (const auto* t = std::get_if<TextPart>(&p)) {
      joined += t->text;
      joined.push_back('\n');
    }
  }
  return crypto::sha256_hex(joined);
}

std::string MockClassifier::fingerprint(const ComplianceRequest& request) {
  return fingerprint(std::vector<Part>{TextPart{listing_text(request)}});
}

void MockClassifier::add(const std::string& fp, std::string response) {
  std::lock_guard lock(mutex_);
  responses_[fp] = std::move(response);
}

void MockClassifier::add(const ComplianceRequest& request, std::string response) {
  add(fingerprint(request), std::move(response));
}

void MockClassifier::set_default(std::optional<std::string> response) {
  std::lock_guard lock(mutex_);
  default_ = std::move(response);
}

std::string MockClassifier::classify(std::string_view, const std::vector<Part>& parts, std::chrono::milliseconds) {
  calls_.fetch_add(1);
  const auto fp = fingerprint(parts);
  std::lock_guard lock(mutex_);
  if (auto it = responses_.find(fp); it != responses_.end()) return it->second;
  if (default_) return *default_;
  throw ClassifierError("no mock response for fingerprint " + fp);
}

std::optional<RawVerdict> parse_verdict(std::string_view raw) {
  const auto j = Json::parse(raw, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto compliant = j.find("compliant");
  if (compliant == j.end() || !compliant->is_boolean()) return std::nullopt;
  const auto reason = j.find("reason");
  for (const auto& [key, value] : j.items()) {
    if (key != "compliant" && key != "reason") return std::nullopt;
  }
  RawVerdict v{compliant->get<bool>(), std::nullopt};
  if (v.compliant) {
    if (reason != j.end()) return std::nullopt;
    return v;
  }
  if (reason == j.end() || !reason->is_string() || reason->get<std::string>().empty()) return std::nullopt;
  v.reason = reason->get<std::string>();
  return v;
}

ComplianceVerdict classify(const ComplianceRequest& request, ClassifierClient& client,
                           const ClassifierSettings& settings) {
  ComplianceVerdict verdict;
  const auto parts = build_parts(request);
  for (int attempt = 0; attempt < 2; ++attempt) {
    ++verdict.classifier_calls;
    std::optional<RawVerdict> parsed;
    try {
      parsed = parse_verdict(client.classify(settings.system_prompt, parts, settings.timeout));
    } catch (const std::exception&) {
      parsed.reset();
    }
    if (parsed) {
      verdict.compliant = parsed->compliant;
      verdict.reason = parsed->reason.value_or("");
      return verdict;
    }
  }
  verdict.compliant = false;
  verdict.reason = std::string(kClassifierUnavailable);
  return verdict;
}

ComplianceVerdict check_compliance(const ComplianceRequest& request, const BlacklistConfig& config,
                                   ClassifierClient& client, const ClassifierSettings& settings) {
  try {
    const auto combined = request.name + " " + request.description + " " + request.category_name;
    if (auto term = check_blacklist(combined, config)) {
      return {false, "listing contains blacklisted term \"" + *term + "\"", 0};
    }
    return classify(request, client, settings);
  } catch (...) {
    return {false, std::string(kClassifierUnavailable), 0};
  }
}

std::vector<CorpusFixture> parse_corpus(std::string_view input) {
  std::vector<CorpusFixture> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < input.size()) {
    auto end = input.find('\n', start);
    if (end == std::string_view::npos) end = input.size();
    ++line_no;
    const auto line = text::trim(input.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    const auto fail = [&](const std::string& why) {
      return std::runtime_error("corpus line " + std::to_string(line_no) + ": " + why);
    };
    const auto j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw fail("malformed JSON");
    CorpusFixture f;
    f.line = line_no;
    try {
      f.id = j.contains("id") ? j.at("id").get<std::string>() : "line-" + std::to_string(line_no);
      f.request.name = j.at("name").get<std::string>();
      f.request.description = j.at("description").get<std::string>();
      f.request.category_name = j.at("category").get<std::string>();
      f.expect_compliant = j.at("expect_compliant").get<bool>();
      if (auto it = j.find("expect_reason_substring"); it != j.end() && !it->is_null()) {
        f.expect_reason_substring = it->get<std::string>();
      }
      if (auto it = j.find("mock_response"); it != j.end() && !it->is_null()) {
        f.mock_response = it->is_string() ? it->get<std::string>() : it->dump();
      }
    } catch (const Json::exception& e) {
      throw fail(std::string("missing or mistyped field: ") + e.what());
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<CorpusFixture> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read corpus " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str());
}

void register_fixtures(MockClassifier& mock, const std::vector<CorpusFixture>& fixtures) {
  for (const auto& f : fixtures) {
    if (f.mock_response) mock.add(f.request, *f.mock_response);
  }
}

}  // namespace market::compliance
