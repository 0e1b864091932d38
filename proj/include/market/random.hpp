#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <span>
#include <vector>

namespace market {

class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::vector<std::uint8_t> bytes(std::size_t n);
  std::uint64_t next_u64();
  // Uniform in [0, bound) without modulo bias. bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound);
};

// Cryptographically secure; backed by the OS/OpenSSL generator.
class OsRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

// Deterministic stream for tests. Not for secrets.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mutex mutex_;
  std::mt19937_64 engine_;
};

}  // namespace market
