#include "doctest.h"
#include "pvgate/gw/cache_entry.hpp"

using namespace pvgate;
using namespace pvgate::gw;
using proto::ChannelValue;

namespace {

constexpr std::uint64_t kSec = 1'000'000'000ull;
constexpr std::uint64_t kHold = 7200 * kSec;  // two hours

CacheEntry active_entry() {
  CacheEntry e;
  e.pv = "dch:hv:v0";
  e.asg = "dch";
  e.state = CacheState::Active;
  e.upstream = 0;
  e.upstream_cid = 11;
  e.last_value = ChannelValue::make_double(42.0, proto::Severity::None, 5);
  e.subscribers = {{1, 1}};
  return e;
}

template <typename T>
int count_actions(const std::vector<CacheAction>& actions) {
  int n = 0;
  for (const auto& a : actions) {
    if (std::holds_alternative<T>(a)) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("last unsubscribe holds the entry for two more hours") {
  auto [e, actions] =
      cache_transition(active_entry(), EvUnsubscribe{{1, 1}}, 100 * kSec, kHold);
  CHECK(e.state == CacheState::Inactive);
  REQUIRE(e.hold_deadline_ns.has_value());
  CHECK(*e.hold_deadline_ns == 100 * kSec + kHold);
  CHECK(e.subscribers.empty());
  CHECK(e.last_value.has_value());  // value retained while held
  CHECK(count_actions<ActSendEventCancel>(actions) == 1);
  CHECK(actions.size() == 1);
}

TEST_CASE("unsubscribe with others remaining changes nothing upstream") {
  CacheEntry e0 = active_entry();
  e0.subscribers = {{1, 1}, {2, 7}};
  auto [e, actions] = cache_transition(e0, EvUnsubscribe{{1, 1}}, 0, kHold);
  CHECK(e.state == CacheState::Active);
  CHECK(e.subscribers.size() == 1);
  CHECK(actions.empty());
}

TEST_CASE("resubscribe within the hold window reuses the cache") {
  CacheEntry held = active_entry();
  held.state = CacheState::Inactive;
  held.subscribers.clear();
  held.hold_deadline_ns = 50 * kSec;

  auto [e, actions] = cache_transition(held, EvSubscribe{{3, 9}}, 40 * kSec, kHold);
  CHECK(e.state == CacheState::Active);
  CHECK_FALSE(e.hold_deadline_ns.has_value());
  REQUIRE(actions.size() == 2);
  CHECK(std::holds_alternative<ActSendEventAdd>(actions[0]));
  // The cached value goes to the new subscriber immediately; there is no
  // action that could emit a SEARCH or CREATE_CHAN.
  auto post = std::get<ActPostTo>(actions[1]);
  CHECK(post.sub == SubscriberKey{3, 9});
  CHECK(post.value == *held.last_value);
}

TEST_CASE("hold expiry is strict: deadline+1 evicts, the deadline itself keeps") {
  CacheEntry held = active_entry();
  held.state = CacheState::Inactive;
  held.subscribers.clear();
  const std::uint64_t t0 = 10 * kSec;
  held.hold_deadline_ns = t0 + kHold;

  auto kept = cache_transition(held, EvTick{}, t0 + kHold, kHold);
  CHECK(kept.entry.state == CacheState::Inactive);
  CHECK(kept.actions.empty());

  auto kept2 = cache_transition(held, EvTick{}, t0 + kHold - kSec, kHold);  // +7199 s
  CHECK(kept2.entry.state == CacheState::Inactive);

  auto evicted = cache_transition(held, EvTick{}, t0 + kHold + kSec, kHold);  // +7201 s
  CHECK(evicted.entry.state == CacheState::Evicted);
  CHECK(count_actions<ActSendClearChan>(evicted.actions) == 1);
}

TEST_CASE("upstream events update the cache and fan out") {
  auto v = ChannelValue::make_double(7.5, proto::Severity::Minor, 99);
  CacheEntry e0 = active_entry();
  e0.subscribers = {{1, 1}, {2, 2}, {3, 3}};
  auto [e, actions] = cache_transition(e0, EvUpstreamEvent{v}, 0, kHold);
  CHECK(e.state == CacheState::Active);
  CHECK(*e.last_value == v);
  REQUIRE(count_actions<ActPostAll>(actions) == 1);
  CHECK(std::get<ActPostAll>(actions[0]).value == v);
}

TEST_CASE("first value activates a connecting entry with subscribers") {
  CacheEntry c;
  c.pv = "x";
  c.state = CacheState::Connecting;
  c.subscribers = {{1, 1}};
  auto v = ChannelValue::make_double(1.0);
  auto [e, actions] = cache_transition(c, EvUpstreamEvent{v}, 0, kHold);
  CHECK(e.state == CacheState::Active);
  CHECK(count_actions<ActPostAll>(actions) == 1);
}

TEST_CASE("a read-created entry with no subscribers goes straight to held") {
  CacheEntry c;
  c.pv = "x";
  c.state = CacheState::Connecting;
  auto [e, actions] = cache_transition(c, EvUpstreamEvent{ChannelValue::make_double(1)},
                                       20 * kSec, kHold);
  CHECK(e.state == CacheState::Inactive);
  CHECK(*e.hold_deadline_ns == 20 * kSec + kHold);
  CHECK(actions.empty());
}

TEST_CASE("upstream loss marks the cache stale rather than dropping it") {
  auto [e, actions] = cache_transition(active_entry(), EvUpstreamLost{}, 0, kHold);
  CHECK(e.state == CacheState::Connecting);
  CHECK(e.upstream == -1);
  REQUIRE(e.last_value.has_value());
  CHECK(e.last_value->severity == proto::Severity::Invalid);
  CHECK(count_actions<ActPostAll>(actions) == 1);
  CHECK(std::get<ActPostAll>(actions[0]).value.severity == proto::Severity::Invalid);
  CHECK(count_actions<ActReresolve>(actions) == 1);
}

TEST_CASE("late events while held update the value silently") {
  CacheEntry held = active_entry();
  held.state = CacheState::Inactive;
  held.subscribers.clear();
  held.hold_deadline_ns = 99 * kSec;
  auto v = ChannelValue::make_double(8.0);
  auto [e, actions] = cache_transition(held, EvUpstreamEvent{v}, 0, kHold);
  CHECK(e.state == CacheState::Inactive);
  CHECK(*e.last_value == v);
  CHECK(actions.empty());
}

TEST_CASE("illegal transitions throw") {
  CacheEntry evicted = active_entry();
  evicted.state = CacheState::Evicted;
  CHECK_THROWS_AS(
      cache_transition(evicted, EvUpstreamEvent{ChannelValue::make_double(0)}, 0, kHold),
      IllegalTransition);
  CHECK_THROWS_AS(cache_transition(evicted, EvTick{}, 0, kHold), IllegalTransition);

  CacheEntry held = active_entry();
  held.state = CacheState::Inactive;
  held.subscribers.clear();
  held.hold_deadline_ns = 1;
  CHECK_THROWS_AS(cache_transition(held, EvUnsubscribe{{1, 1}}, 0, kHold),
                  IllegalTransition);
}

TEST_CASE("transitions are pure: the input entry is never mutated") {
  const CacheEntry e0 = active_entry();
  CacheEntry copy = e0;
  auto out = cache_transition(copy, EvUnsubscribe{{1, 1}}, 0, kHold);
  CHECK(copy.state == e0.state);
  CHECK(copy.subscribers == e0.subscribers);
  CHECK(out.entry.state == CacheState::Inactive);
}
