#pragma once

#include <cstdint>
#include <vector>

namespace pvgate::util {

// Sliding-window event rate over per-second buckets. rate_per_sec(now)
// averages the window of *completed* seconds [floor(now)-W, floor(now)),
// so the value is stable within a second and exact for steady traffic
// once a full window has elapsed.
class RateCounter {
 public:
  explicit RateCounter(std::uint32_t window_seconds = 10);

  void record(std::uint64_t now_ns, std::uint64_t count = 1);
  double rate_per_sec(std::uint64_t now_ns) const;
  std::uint64_t total() const { return total_; }
  std::uint32_t window_seconds() const { return window_; }

 private:
  std::uint32_t window_;
  std::vector<std::uint64_t> counts_;   // counts_[s % window_]
  std::vector<std::uint64_t> seconds_;  // absolute second held by each slot
  std::uint64_t total_ = 0;
};

}  // namespace pvgate::util
