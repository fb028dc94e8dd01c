#include <benchmark/benchmark.h>

#include "pvgate/gw/cache_entry.hpp"

using namespace pvgate;
using namespace pvgate::gw;

namespace {

constexpr std::uint64_t kHold = 7200ull * 1'000'000'000ull;

CacheEntry entry_with_subscribers(int n) {
  CacheEntry e;
  e.pv = "dch:hv:v0";
  e.state = CacheState::Active;
  e.upstream = 0;
  e.last_value = proto::ChannelValue::make_double(1.0);
  for (int i = 0; i < n; ++i) {
    e.subscribers.insert({static_cast<std::uint64_t>(i), 1});
  }
  return e;
}

void BM_UpstreamEventFanout(benchmark::State& state) {
  const auto base = entry_with_subscribers(static_cast<int>(state.range(0)));
  const CacheEvent ev = EvUpstreamEvent{proto::ChannelValue::make_double(2.0, {}, 7)};
  for (auto _ : state) {
    auto out = cache_transition(base, ev, 0, kHold);
    benchmark::DoNotOptimize(out.actions.size());
  }
}
BENCHMARK(BM_UpstreamEventFanout)->Arg(1)->Arg(20)->Arg(200);

void BM_SubscribeUnsubscribeCycle(benchmark::State& state) {
  const auto base = entry_with_subscribers(1);
  for (auto _ : state) {
    auto held = cache_transition(base, EvUnsubscribe{{0, 1}}, 1000, kHold);
    auto back = cache_transition(held.entry, EvSubscribe{{9, 9}}, 2000, kHold);
    benchmark::DoNotOptimize(back.entry.state);
  }
}
BENCHMARK(BM_SubscribeUnsubscribeCycle);

}  // namespace
