#pragma once

#include <cstdint>
#include <functional>
#include <memory>

namespace ssoprobe::openid {

/// Seconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;

Clock system_clock();

/// Settable clock shared between every component of a deterministic run.
class ManualClock {
 public:
  explicit ManualClock(std::int64_t start);
  std::int64_t now() const;
  void set(std::int64_t seconds);
  void advance(std::int64_t seconds);
  Clock clock() const;

 private:
  std::shared_ptr<std::int64_t> now_;
};

}  // namespace ssoprobe::openid
