#include "pvgate/gw/cache_entry.hpp"

namespace pvgate::gw {

const char* to_string(CacheState s) {
  switch (s) {
    case CacheState::Connecting: return "CONNECTING";
    case CacheState::Active: return "ACTIVE";
    case CacheState::Inactive: return "INACTIVE";
    case CacheState::Evicted: return "EVICTED";
  }
  return "?";
}

IllegalTransition::IllegalTransition(CacheState state, const char* event)
    : std::logic_error(std::string("illegal cache transition: ") + event + " in state " +
                       to_string(state)) {}

namespace {

struct Visitor {
  CacheEntry e;
  std::uint64_t now;
  std::uint64_t hold;
  std::vector<CacheAction> actions;

  void become_inactive() {
    e.state = CacheState::Inactive;
    e.hold_deadline_ns = now + hold;
  }

  TransitionOut out() && { return {std::move(e), std::move(actions)}; }

  TransitionOut operator()(const EvSubscribe& ev) && {
    switch (e.state) {
      case CacheState::Connecting:
        e.subscribers.insert(ev.sub);
        if (e.last_value) actions.push_back(ActPostTo{ev.sub, *e.last_value});
        break;
      case CacheState::Active:
        e.subscribers.insert(ev.sub);
        if (e.last_value) actions.push_back(ActPostTo{ev.sub, *e.last_value});
        break;
      case CacheState::Inactive:
        // Reuse within the hold window: resubscribe upstream and answer
        // from the cache immediately; no SEARCH, no CREATE_CHAN.
        e.state = CacheState::Active;
        e.hold_deadline_ns.reset();
        e.subscribers.insert(ev.sub);
        actions.push_back(ActSendEventAdd{});
        if (e.last_value) actions.push_back(ActPostTo{ev.sub, *e.last_value});
        break;
      case CacheState::Evicted:
        throw IllegalTransition(e.state, "CLIENT_SUBSCRIBE");
    }
    return std::move(*this).out();
  }

  TransitionOut operator()(const EvUnsubscribe& ev) && {
    switch (e.state) {
      case CacheState::Connecting:
        e.subscribers.erase(ev.sub);
        if (e.subscribers.empty()) become_inactive();
        break;
      case CacheState::Active:
        e.subscribers.erase(ev.sub);
        if (e.subscribers.empty()) {
          become_inactive();
          actions.push_back(ActSendEventCancel{});
        }
        break;
      case CacheState::Inactive:
      case CacheState::Evicted:
        throw IllegalTransition(e.state, "CLIENT_UNSUBSCRIBE");
    }
    return std::move(*this).out();
  }

  TransitionOut operator()(const EvUpstreamEvent& ev) && {
    switch (e.state) {
      case CacheState::Connecting:
        e.last_value = ev.value;
        if (!e.subscribers.empty()) {
          e.state = CacheState::Active;
          e.hold_deadline_ns.reset();
          actions.push_back(ActPostAll{ev.value});
        } else {
          become_inactive();
        }
        break;
      case CacheState::Active:
        e.last_value = ev.value;
        actions.push_back(ActPostAll{ev.value});
        break;
      case CacheState::Inactive:
        e.last_value = ev.value;  // event raced the cancel; keep it
        break;
      case CacheState::Evicted:
        throw IllegalTransition(e.state, "UPSTREAM_EVENT");
    }
    return std::move(*this).out();
  }

  TransitionOut operator()(const EvUpstreamLost&) && {
    switch (e.state) {
      case CacheState::Connecting:
        e.upstream = -1;
        actions.push_back(ActReresolve{});
        break;
      case CacheState::Active: {
        e.state = CacheState::Connecting;
        e.upstream = -1;
        if (e.last_value) {
          // Stale, not absent: the cached value survives flagged INVALID.
          e.last_value->severity = proto::Severity::Invalid;
          actions.push_back(ActPostAll{*e.last_value});
        }
        actions.push_back(ActReresolve{});
        break;
      }
      case CacheState::Inactive:
        e.upstream = -1;
        break;
      case CacheState::Evicted:
        throw IllegalTransition(e.state, "UPSTREAM_LOST");
    }
    return std::move(*this).out();
  }

  TransitionOut operator()(const EvTick&) && {
    switch (e.state) {
      case CacheState::Connecting:
      case CacheState::Active:
        break;
      case CacheState::Inactive:
        if (e.hold_deadline_ns && now > *e.hold_deadline_ns) {
          e.state = CacheState::Evicted;
          actions.push_back(ActSendClearChan{});
        }
        break;
      case CacheState::Evicted:
        throw IllegalTransition(e.state, "TICK");
    }
    return std::move(*this).out();
  }
};

}  // namespace

TransitionOut cache_transition(CacheEntry entry, const CacheEvent& event,
                               std::uint64_t now_ns, std::uint64_t hold_ns) {
  Visitor v{std::move(entry), now_ns, hold_ns, {}};
  return std::visit(
      [&v](const auto& ev) -> TransitionOut { return std::move(v)(ev); }, event);
}

}  // namespace pvgate::gw
