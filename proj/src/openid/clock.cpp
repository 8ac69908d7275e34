#include "ssoprobe/openid/clock.hpp"

#include <chrono>

namespace ssoprobe::openid {

Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

ManualClock::ManualClock(std::int64_t start) : now_(std::make_shared<std::int64_t>(start)) {}
std::int64_t ManualClock::now() const { return *now_; }
void ManualClock::set(std::int64_t seconds) { *now_ = seconds; }
void ManualClock::advance(std::int64_t seconds) { *now_ += seconds; }
Clock ManualClock::clock() const {
  return [state = now_] { return *state; };
}

}  // namespace ssoprobe::openid
