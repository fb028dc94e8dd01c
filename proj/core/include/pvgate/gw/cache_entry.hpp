#pragma once

// Per-PV gateway cache state machine. cache_transition is a pure
// function over value-semantic entries; the surrounding engine performs
// the returned actions (upstream frames, downstream posts). Keeping the
// transitions pure is what makes the hold/evict arithmetic testable
// without a network.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pvgate/proto/value.hpp"

namespace pvgate::gw {

enum class CacheState : std::uint8_t { Connecting, Active, Inactive, Evicted };

const char* to_string(CacheState s);

struct SubscriberKey {
  std::uint64_t conn_id = 0;
  std::uint32_t cid = 0;
  auto operator<=>(const SubscriberKey&) const = default;
};

struct CacheEntry {
  std::string pv;
  std::string asg;
  CacheState state = CacheState::Connecting;
  int upstream = -1;  // index into the configured upstream list, -1 = unbound
  std::uint32_t upstream_cid = 0;
  std::optional<proto::ChannelValue> last_value;
  std::set<SubscriberKey> subscribers;
  std::optional<std::uint64_t> hold_deadline_ns;
};

// Events.
struct EvSubscribe { SubscriberKey sub; };
struct EvUnsubscribe { SubscriberKey sub; };
struct EvUpstreamEvent { proto::ChannelValue value; };
struct EvUpstreamLost {};
struct EvTick {};
using CacheEvent = std::variant<EvSubscribe, EvUnsubscribe, EvUpstreamEvent,
                                EvUpstreamLost, EvTick>;

// Actions for the engine, in order.
struct ActSendEventAdd {};     // ensure a live upstream subscription
struct ActSendEventCancel {};  // drop the upstream subscription, keep the channel
struct ActSendClearChan {};    // release the upstream channel entirely
struct ActPostTo {             // deliver to one subscriber
  SubscriberKey sub;
  proto::ChannelValue value;
};
struct ActPostAll { proto::ChannelValue value; };  // deliver to every subscriber
struct ActReresolve {};        // schedule re-resolution of the PV
using CacheAction = std::variant<ActSendEventAdd, ActSendEventCancel, ActSendClearChan,
                                 ActPostTo, ActPostAll, ActReresolve>;

struct IllegalTransition : std::logic_error {
  IllegalTransition(CacheState state, const char* event);
};

struct TransitionOut {
  CacheEntry entry;
  std::vector<CacheAction> actions;
};

// State x event table:
//   CONNECTING  SUBSCRIBE       add subscriber; post stale value if any
//               UNSUBSCRIBE     remove; empty -> INACTIVE (hold starts)
//               UPSTREAM_EVENT  value cached; subscribers ? ACTIVE + post all
//                               : INACTIVE (hold starts)
//               UPSTREAM_LOST   stay CONNECTING, reresolve
//   ACTIVE      SUBSCRIBE       add; post cached value to the newcomer
//               UNSUBSCRIBE     remove; last one -> INACTIVE + EVENT_CANCEL,
//                               hold_deadline = now + hold
//               UPSTREAM_EVENT  cache + post all
//               UPSTREAM_LOST   -> CONNECTING; post cached value marked
//                               INVALID; reresolve
//   INACTIVE    SUBSCRIBE       -> ACTIVE + EVENT_ADD; post cached value
//               UPSTREAM_EVENT  cache silently (event raced the cancel)
//               UPSTREAM_LOST   unbind, stay INACTIVE
//               TICK            past deadline -> EVICTED + CLEAR_CHAN
//   EVICTED     anything        IllegalTransition (entry must be discarded)
TransitionOut cache_transition(CacheEntry entry, const CacheEvent& event,
                               std::uint64_t now_ns, std::uint64_t hold_ns);

}  // namespace pvgate::gw
