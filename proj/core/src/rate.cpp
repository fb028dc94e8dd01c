#include "pvgate/util/rate.hpp"

namespace pvgate::util {

namespace {
constexpr std::uint64_t kNsPerSec = 1'000'000'000ull;
}

RateCounter::RateCounter(std::uint32_t window_seconds)
    : window_(window_seconds == 0 ? 1 : window_seconds),
      counts_(window_, 0),
      seconds_(window_, ~0ull) {}

void RateCounter::record(std::uint64_t now_ns, std::uint64_t count) {
  const std::uint64_t sec = now_ns / kNsPerSec;
  auto& slot_sec = seconds_[sec % window_];
  auto& slot = counts_[sec % window_];
  if (slot_sec != sec) {
    slot_sec = sec;
    slot = 0;
  }
  slot += count;
  total_ += count;
}

double RateCounter::rate_per_sec(std::uint64_t now_ns) const {
  const std::uint64_t now_sec = now_ns / kNsPerSec;
  if (now_sec == 0) return 0.0;
  const std::uint64_t lo = now_sec >= window_ ? now_sec - window_ : 0;
  std::uint64_t sum = 0;
  for (std::uint32_t i = 0; i < window_; ++i) {
    if (seconds_[i] != ~0ull && seconds_[i] >= lo && seconds_[i] < now_sec) {
      sum += counts_[i];
    }
  }
  return static_cast<double>(sum) / static_cast<double>(window_);
}

}  // namespace pvgate::util
