#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace market::store {

using Json = nlohmann::json;

namespace collections {
inline constexpr std::string_view kUsers = "users";
inline constexpr std::string_view kOtps = "otps";
inline constexpr std::string_view kCategories = "categories";
inline constexpr std::string_view kProducts = "products";
inline constexpr std::string_view kRequests = "requests";
inline constexpr std::string_view kReputation = "reputation";
}  // namespace collections

struct Document {
  std::string id;
  Json body = Json::object();
  // Starts at 0 on creation, +1 on every successful write.
  std::uint64_t version = 0;
};

struct SortSpec {
  std::string field;
  bool descending = false;
};

struct Query {
  std::function<bool(const Json& body)> where;  // empty matches everything
  std::optional<SortSpec> sort;
  std::optional<std::size_t> limit;
};

enum class CasStatus { Ok, VersionConflict, NotFound };

struct CasResult {
  CasStatus status = CasStatus::NotFound;
  Document document;  // the stored document on Ok
  bool ok() const noexcept { return status == CasStatus::Ok; }
};

// Named collections of schemaless JSON documents with per-document
// compare-and-set. All methods are thread-safe.
class DocumentStore {
 public:
  virtual ~DocumentStore() = default;

  // Fresh, monotonically increasing 24-hex-digit identifier.
  virtual std::string new_id() = 0;

  // Upsert. Generates an id when doc.id is empty; doc.version is ignored.
  virtual Document put(std::string_view collection, Document doc) = 0;
  // Create-only; nullopt if the id already exists.
  virtual std::optional<Document> insert(std::string_view collection, Document doc) = 0;
  virtual std::optional<Document> get(std::string_view collection, std::string_view id) const = 0;
  // Results come from one consistent snapshot. Order is the sort field then
  // id (same direction); without a sort, ascending id.
  virtual std::vector<Document> query(std::string_view collection, const Query& q) const = 0;
  virtual CasResult compare_and_set(std::string_view collection, std::string_view id,
                                    std::uint64_t expected_version, Json body) = 0;
  // Idempotent.
  virtual void remove(std::string_view collection, std::string_view id) = 0;

  // Content-addressed binary storage; returns the lowercase sha256 hex key.
  virtual std::string put_blob(std::span<const std::uint8_t> bytes) = 0;
  virtual std::optional<std::vector<std::uint8_t>> get_blob(std::string_view key) const = 0;

  virtual bool healthy() const = 0;
};

// In-process store. With a root directory every mutation is appended to
// `<root>/<collection>.journal` (little-endian u32 length + JSON record)
// before it is applied; journals are replayed and compacted on open.
// Blobs live in `<root>/blobs/<sha256>`.
class EmbeddedStore final : public DocumentStore {
 public:
  static std::unique_ptr<EmbeddedStore> in_memory();
  static std::unique_ptr<EmbeddedStore> open(const std::filesystem::path& root);

  ~EmbeddedStore() override;
  EmbeddedStore(const EmbeddedStore&) = delete;
  EmbeddedStore& operator=(const EmbeddedStore&) = delete;

  std::string new_id() override;
  Document put(std::string_view collection, Document doc) override;
  std::optional<Document> insert(std::string_view collection, Document doc) override;
  std::optional<Document> get(std::string_view collection, std::string_view id) const override;
  std::vector<Document> query(std::string_view collection, const Query& q) const override;
  CasResult compare_and_set(std::string_view collection, std::string_view id,
                            std::uint64_t expected_version, Json body) override;
  void remove(std::string_view collection, std::string_view id) override;
  std::string put_blob(std::span<const std::uint8_t> bytes) override;
  std::optional<std::vector<std::uint8_t>> get_blob(std::string_view key) const override;
  bool healthy() const override;

  const std::optional<std::filesystem::path>& root() const noexcept;

 private:
  struct Impl;
  explicit EmbeddedStore(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Environment variable naming the data directory when the config omits it.
inline constexpr const char* kDataDirEnv = "MARKET_DATA_DIR";

}  // namespace market::store
