#include "market/store.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "market/crypto.hpp"
#include "market/error.hpp"

namespace market::store {
namespace fs = std::filesystem;
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void check_collection_name(std::string_view name) {
  const bool ok = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
  if (!ok) throw std::invalid_argument("invalid collection name: " + std::string(name));
}

std::optional<std::uint64_t> parse_generated_id(std::string_view id) {
  if (id.size() != 24) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : id) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else return std::nullopt;
    if (v >> 60) return std::nullopt;
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

std::string encode_record(const Json& record) {
  const auto payload = record.dump();
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xff));
  out += payload;
  return out;
}

bool json_less(const Json& a, const Json& b) {
  // nlohmann orders values of different types by type rank, which keeps
  // missing fields (null) ahead of everything else.
  return a < b;
}

}  // namespace

struct EmbeddedStore::Impl {
  using Collection = std::map<std::string, Document, std::less<>>;

  std::optional<fs::path> root;
  mutable std::shared_mutex mutex;
  std::map<std::string, Collection, std::less<>> collections;
  std::unordered_map<std::string, std::vector<std::uint8_t>> blobs;  // memory mode only
  std::map<std::string, FilePtr, std::less<>> journals;
  std::atomic<std::uint64_t> next_id{1};

  Collection& collection(std::string_view name) {
    auto it = collections.find(name);
    if (it == collections.end()) it = collections.emplace(std::string(name), Collection{}).first;
    return it->second;
  }

  const Collection* find_collection(std::string_view name) const {
    auto it = collections.find(name);
    return it == collections.end() ? nullptr : &it->second;
  }

  // Caller holds the unique lock.
  void append(std::string_view name, const Json& record) {
    if (!root) return;
    auto it = journals.find(name);
    if (it == journals.end()) {
      const auto path = *root / (std::string(name) + ".journal");
      FilePtr f(std::fopen(path.c_str(), "ab"));
      if (!f) throw Error(ErrorCode::StoreUnavailable, "cannot open journal " + path.string());
      it = journals.emplace(std::string(name), std::move(f)).first;
    }
    const auto bytes = encode_record(record);
    if (std::fwrite(bytes.data(), 1, bytes.size(), it->second.get()) != bytes.size() ||
        std::fflush(it->second.get()) != 0) {
      throw Error(ErrorCode::StoreUnavailable, "journal write failed for " + std::string(name));
    }
  }

  void note_id(std::string_view id) {
    if (auto v = parse_generated_id(id)) {
      auto cur = next_id.load();
      while (*v >= cur && !next_id.compare_exchange_weak(cur, *v + 1)) {
      }
    }
  }

  void replay(const fs::path& file, std::string_view name) {
    std::ifstream in(file, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto& coll = collection(name);
    std::size_t pos = 0;
    while (pos + 4 <= data.size()) {
      std::uint32_t n = 0;
      for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
      if (pos + 4 + n > data.size()) break;  // torn tail
      Json rec = Json::parse(data.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                             data.begin() + static_cast<std::ptrdiff_t>(pos + 4 + n), nullptr, false);
      if (rec.is_discarded() || !rec.is_object()) break;
      pos += 4 + n;
      const auto id = rec.value("id", std::string{});
      if (rec.value("op", std::string{}) == "del") {
        coll.erase(id);
      } else {
        coll[id] = Document{id, rec.at("body"), rec.at("v").get<std::uint64_t>()};
        note_id(id);
      }
    }
  }

  void compact(std::string_view name) {
    const auto path = *root / (std::string(name) + ".journal");
    const auto tmp = *root / (std::string(name) + ".journal.tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      for (const auto& [id, doc] : collection(name)) {
        const auto bytes = encode_record({{"op", "put"}, {"id", id}, {"v", doc.version}, {"body", doc.body}});
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      }
      if (!out) throw Error(ErrorCode::StoreUnavailable, "compaction failed for " + path.string());
    }
    fs::rename(tmp, path);
  }
};

EmbeddedStore::EmbeddedStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
EmbeddedStore::~EmbeddedStore() = default;

std::unique_ptr<EmbeddedStore> EmbeddedStore::in_memory() {
  return std::unique_ptr<EmbeddedStore>(new EmbeddedStore(std::make_unique<Impl>()));
}

std::unique_ptr<EmbeddedStore> EmbeddedStore::open(const fs::path& root) {
  auto impl = std::make_unique<Impl>();
  std::error_code ec;
  fs::create_directories(root / "blobs", ec);
  if (ec || !fs::is_directory(root)) {
    throw Error(ErrorCode::StoreUnavailable, "cannot create data directory " + root.string());
  }
  impl->root = root;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".journal") continue;
    const auto name = entry.path().stem().string();
    check_collection_name(name);
    impl->replay(entry.path(), name);
  }
  for (const auto& [name, coll] : impl->collections) impl->compact(name);
  return std::unique_ptr<EmbeddedStore>(new EmbeddedStore(std::move(impl)));
}

const std::optional<fs::path>& EmbeddedStore::root() const noexcept { return impl_->root; }

std::string EmbeddedStore::new_id() {
  const auto v = impl_->next_id.fetch_add(1);
  char buf[25];
  std::snprintf(buf, sizeof buf, "%024llx", static_cast<unsigned long long>(v));
  return buf;
}

Document EmbeddedStore::put(std::string_view collection, Document doc) {
  check_collection_name(collection);
  if (doc.id.empty()) doc.id = new_id();
  std::unique_lock lock(impl_->mutex);
  auto& coll = impl_->collection(collection);
  auto it = coll.find(doc.id);
  doc.version = it == coll.end() ? 0 : it->second.version + 1;
  impl_->append(collection, {{"op", "put"}, {"id", doc.id}, {"v", doc.version}, {"body", doc.body}});
  impl_->note_id(doc.id);
  coll[doc.id] = doc;
  return doc;
}

std::optional<Document> EmbeddedStore::insert(std::string_view collection, Document doc) {
  check_collection_name(collection);
  if (doc.id.empty()) doc.id = new_id();
  std::unique_lock lock(impl_->mutex);
  auto& coll = impl_->collection(collection);
  if (coll.contains(doc.id)) return std::nullopt;
  doc.version = 0;
  impl_->append(collection, {{"op", "put"}, {"id", doc.id}, {"v", doc.version}, {"body", doc.body}});
  impl_->note_id(doc.id);
  coll.emplace(doc.id, doc);
  return doc;
}

std::optional<Document> EmbeddedStore::get(std::string_view collection, std::string_view id) const {
  std::shared_lock lock(impl_->mutex);
  const auto* coll = impl_->find_collection(collection);
  if (!coll) return std::nullopt;
  auto it = coll->find(id);
  if (it == coll->end()) return std::nullopt;
  return it->second;
}

std::vector<Document> EmbeddedStore::query(std::string_view collection, const Query& q) const {
  std::vector<Document> out;
  {
    std::shared_lock lock(impl_->mutex);
    const auto* coll = impl_->find_collection(collection);
    if (!coll) return out;
    for (const auto& [id, doc] : *coll) {
      if (!q.where || q.where(doc.body)) out.push_back(doc);
    }
  }
  if (q.sort) {
    const auto& field = q.sort->field;
    const bool desc = q.sort->descending;
    const Json null_value;
    auto key = [&](const Document& d) -> const Json& {
      auto it = d.body.find(field);
      return it == d.body.end() ? null_value : *it;
    };
    std::stable_sort(out.begin(), out.end(), [&](const Document& a, const Document& b) {
      const auto& ka = key(a);
      const auto& kb = key(b);
      if (json_less(ka, kb)) return !desc;
      if (json_less(kb, ka)) return desc;
      return desc ? a.id > b.id : a.id < b.id;
    });
  }
  if (q.limit && out.size() > *q.limit) out.resize(*q.limit);
  return out;
}

CasResult EmbeddedStore::compare_and_set(std::string_view collection, std::string_view id,
                                         std::uint64_t expected_version, Json body) {
  std::unique_lock lock(impl_->mutex);
  auto& coll = impl_->collection(collection);
  auto it = coll.find(id);
  if (it == coll.end()) return {CasStatus::NotFound, {}};
  if (it->second.version != expected_version) return {CasStatus::VersionConflict, it->second};
  const auto version = expected_version + 1;
  impl_->append(collection, {{"op", "put"}, {"id", it->first}, {"v", version}, {"body", body}});
  it->second.body = std::move(body);
  it->second.version = version;
  return {CasStatus::Ok, it->second};
}

void EmbeddedStore::remove(std::string_view collection, std::string_view id) {
  std::unique_lock lock(impl_->mutex);
  auto& coll = impl_->collection(collection);
  auto it = coll.find(id);
  if (it == coll.end()) return;
  impl_->append(collection, {{"op", "del"}, {"id", it->first}});
  coll.erase(it);
}

std::string EmbeddedStore::put_blob(std::span<const std::uint8_t> bytes) {
  auto key = crypto::sha256_hex(bytes);
  std::unique_lock lock(impl_->mutex);
  if (!impl_->root) {
    impl_->blobs.try_emplace(key, bytes.begin(), bytes.end());
    return key;
  }
  const auto path = *impl_->root / "blobs" / key;
  if (fs::exists(path)) return key;
  const auto tmp = *impl_->root / "blobs" / (key + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::StoreUnavailable, "blob write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::StoreUnavailable, "blob write failed: " + ec.message());
  return key;
}

std::optional<std::vector<std::uint8_t>> EmbeddedStore::get_blob(std::string_view key) const {
  if (key.size() != 64 || !std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
      })) {
    return std::nullopt;
  }
  std::shared_lock lock(impl_->mutex);
  if (!impl_->root) {
    auto it = impl_->blobs.find(std::string(key));
    if (it == impl_->blobs.end()) return std::nullopt;
    return it->second;
  }
  std::ifstream in(*impl_->root / "blobs" / std::string(key), std::ios::binary);
  if (!in) return std::nullopt;
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool EmbeddedStore::healthy() const {
  if (!impl_->root) return true;
  std::error_code ec;
  if (!fs::is_directory(*impl_->root, ec)) return false;
  const auto probe = *impl_->root / ".healthz";
  {
    std::ofstream out(probe, std::ios::trunc);
    if (!(out << "ok")) return false;
  }
  fs::remove(probe, ec);
  return true;
}

}  // namespace market::store
