#pragma once

#include <atomic>
#include <cstdint>

namespace market {

// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kMillisPerSecond = 1000;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

// Test clock; only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = 1'700'000'000'000) : now_(start) {}

  Timestamp now() const override { return now_.load(); }
  void set(Timestamp t) { now_.store(t); }
  void advance_ms(Timestamp ms) { now_.fetch_add(ms); }
  void advance_seconds(std::int64_t s) { now_.fetch_add(s * kMillisPerSecond); }

 private:
  std::atomic<Timestamp> now_;
};

}  // namespace market
