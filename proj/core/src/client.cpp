#include "pvgate/client/client.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace pvgate::client {

using proto::Command;
using proto::Frame;

const char* to_string(ClientStatus s) {
  switch (s) {
    case ClientStatus::Ok: return "ok";
    case ClientStatus::NotFound: return "not-found";
    case ClientStatus::DuplicatePv: return "duplicate-pv";
    case ClientStatus::AccessDenied: return "access-denied";
    case ClientStatus::WriteDenied: return "write-denied";
    case ClientStatus::ConnLost: return "conn-lost";
    case ClientStatus::Timeout: return "timeout";
  }
  return "?";
}

ClientSession::ClientSession(net::Reactor& reactor, AddressList list,
                             proto::Identity identity)
    : reactor_(reactor), list_(std::move(list)), identity_(std::move(identity)) {
  if (list_.endpoints.empty()) throw std::invalid_argument("empty address list");
  std::set<std::string> seen;
  for (const auto& ep : list_.endpoints) {
    if (!seen.insert(ep.str()).second) {
      throw std::invalid_argument("duplicate endpoint in address list: " + ep.str());
    }
  }
  peers_.resize(list_.endpoints.size());
}

ClientSession::~ClientSession() { close(); }

void ClientSession::close() {
  if (closed_) return;
  closed_ = true;
  for (auto& [pv, probe] : probes_) reactor_.cancel(probe.timeout);
  probes_.clear();
  monitors_.clear();
  for (auto& p : peers_) {
    reactor_.cancel(p.echo_timer);
    reactor_.cancel(p.dead_timer);
    if (p.conn) {
      p.conn->set_handler(nullptr);
      p.conn->close();
    }
    p = Peer{};
  }
  peer_by_conn_.clear();
}

int ClientSession::peer_index(std::uint64_t conn_id) const {
  auto it = peer_by_conn_.find(conn_id);
  return it == peer_by_conn_.end() ? -1 : static_cast<int>(it->second);
}

void ClientSession::ensure_peer(std::size_t k, std::function<void(bool)> done) {
  Peer& p = peers_[k];
  switch (p.state) {
    case Peer::State::Up:
      done(true);
      return;
    case Peer::State::Connecting:
      p.connect_waiters.push_back(std::move(done));
      return;
    case Peer::State::Down:
      break;
  }
  p.state = Peer::State::Connecting;
  p.connect_waiters.push_back(std::move(done));
  reactor_.connect(list_.endpoints[k], [this, k](net::ConnectionPtr conn) {
    if (closed_) return;
    Peer& peer = peers_[k];
    if (!conn) {
      peer.state = Peer::State::Down;
      auto waiters = std::move(peer.connect_waiters);
      peer.connect_waiters.clear();
      for (auto& w : waiters) w(false);
      return;
    }
    peer.state = Peer::State::Up;
    peer.conn = std::move(conn);
    peer.reader = proto::FrameReader{};
    peer.conn->set_handler(this);
    peer_by_conn_[peer.conn->id()] = k;
    arm_heartbeat(k);
    auto waiters = std::move(peer.connect_waiters);
    peer.connect_waiters.clear();
    for (auto& w : waiters) w(true);
  });
}

void ClientSession::arm_heartbeat(std::size_t k) {
  Peer& p = peers_[k];
  reactor_.cancel(p.echo_timer);
  reactor_.cancel(p.dead_timer);
  const std::uint64_t hb = heartbeat_ms * net::kNsPerMs;
  p.echo_timer = reactor_.schedule(hb, [this, k]() {
    Peer& peer = peers_[k];
    if (peer.state != Peer::State::Up) return;
    send_peer(k, Frame(Command::Echo, 0));
  });
  // Two silent heartbeat intervals after the last received byte.
  p.dead_timer = reactor_.schedule(2 * hb, [this, k]() { peer_lost(k); });
}

void ClientSession::send_peer(std::size_t k, const Frame& f) {
  Peer& p = peers_[k];
  if (p.state != Peer::State::Up || !p.conn) return;
  p.conn->send(proto::encode_frame(f));
}

void ClientSession::on_data(net::Connection& c, std::span<const std::uint8_t> data) {
  int k = peer_index(c.id());
  if (k < 0) return;
  Peer& p = peers_[static_cast<std::size_t>(k)];
  p.reader.feed(data);
  arm_heartbeat(static_cast<std::size_t>(k));
  peer_frames(static_cast<std::size_t>(k));
}

void ClientSession::on_closed(net::Connection& c) {
  int k = peer_index(c.id());
  if (k >= 0) peer_lost(static_cast<std::size_t>(k));
}

void ClientSession::peer_lost(std::size_t k) {
  Peer& p = peers_[k];
  if (p.conn) {
    peer_by_conn_.erase(p.conn->id());
    p.conn->set_handler(nullptr);
    p.conn->close();
  }
  reactor_.cancel(p.echo_timer);
  reactor_.cancel(p.dead_timer);
  auto chans = std::move(p.chans);
  auto pending_search = std::move(p.pending_search);
  auto waiters = std::move(p.connect_waiters);
  p = Peer{};

  for (auto& w : waiters) w(false);
  for (auto& [cid, pv] : pending_search) probe_done(pv, k, false);

  for (auto& [cid, ch] : chans) {
    for (auto& w : ch.open_waiters) w(false);
    for (auto& r : ch.pending_reads) r(std::nullopt);
    for (auto& wr : ch.pending_writes) wr(std::nullopt);
    if (ch.monitor != 0) {
      auto mit = monitors_.find(ch.monitor);
      if (mit != monitors_.end()) {
        Monitor mon = std::move(mit->second);
        monitors_.erase(mit);
        // Stale, not silent: one final INVALID sample, then the end.
        proto::ChannelValue last =
            mon.last.value_or(proto::ChannelValue::make_double(0.0));
        last.severity = proto::Severity::Invalid;
        last.timestamp_ns = reactor_.now_ns();
        if (mon.sink) mon.sink(last);
        if (mon.done) mon.done(ClientStatus::ConnLost);
      }
    }
  }
}

void ClientSession::peer_frames(std::size_t k) {
  for (;;) {
    Peer& p = peers_[k];
    if (p.state != Peer::State::Up) return;
    Frame f;
    auto st = p.reader.next(f);
    if (st == proto::FrameDecodeStatus::NeedMore) return;
    if (st != proto::FrameDecodeStatus::Ok) {
      peer_lost(k);
      return;
    }
    dispatch(k, f);
  }
}

void ClientSession::dispatch(std::size_t k, const Frame& f) {
  Peer& p = peers_[k];
  switch (f.cmd()) {
    case Command::SearchOk:
    case Command::SearchFail: {
      auto it = p.pending_search.find(f.cid);
      if (it == p.pending_search.end()) return;
      const std::string pv = it->second;
      p.pending_search.erase(it);
      probe_done(pv, k, f.cmd() == Command::SearchOk);
      break;
    }
    case Command::ChanOk: {
      auto it = p.chans.find(f.cid);
      if (it == p.chans.end()) return;
      auto ok = proto::parse_chan_ok(f);
      it->second.open = true;
      it->second.writable = ok && ok->writable;
      auto waiters = std::move(it->second.open_waiters);
      it->second.open_waiters.clear();
      for (auto& w : waiters) w(true);
      break;
    }
    case Command::ChanFail: {
      auto it = p.chans.find(f.cid);
      if (it == p.chans.end()) return;
      auto waiters = std::move(it->second.open_waiters);
      auto reads = std::move(it->second.pending_reads);
      auto writes = std::move(it->second.pending_writes);
      const std::uint64_t mon_id = it->second.monitor;
      p.chans.erase(it);
      for (auto& w : waiters) w(false);
      for (auto& r : reads) r(std::nullopt);
      for (auto& wr : writes) wr(std::nullopt);
      if (mon_id != 0) {
        auto mit = monitors_.find(mon_id);
        if (mit != monitors_.end()) {
          auto done = std::move(mit->second.done);
          monitors_.erase(mit);
          if (done) done(ClientStatus::AccessDenied);
        }
      }
      break;
    }
    case Command::ReadReply: {
      auto it = p.chans.find(f.cid);
      if (it == p.chans.end() || it->second.pending_reads.empty()) return;
      auto v = proto::parse_value_payload(f);
      auto cb = std::move(it->second.pending_reads.front());
      it->second.pending_reads.pop_front();
      cb(std::move(v));
      break;
    }
    case Command::WriteOk:
    case Command::WriteDenied: {
      auto it = p.chans.find(f.cid);
      if (it == p.chans.end() || it->second.pending_writes.empty()) return;
      auto cb = std::move(it->second.pending_writes.front());
      it->second.pending_writes.pop_front();
      cb(f.cmd() == Command::WriteOk);
      break;
    }
    case Command::Event: {
      auto it = p.chans.find(f.cid);
      if (it == p.chans.end() || it->second.monitor == 0) return;
      auto mit = monitors_.find(it->second.monitor);
      if (mit == monitors_.end()) return;
      auto v = proto::parse_value_payload(f);
      if (!v) return;
      mit->second.last = *v;
      if (mit->second.sink) mit->second.sink(*v);
      break;
    }
    case Command::Echo:
      send_peer(k, Frame(Command::EchoReply, f.cid));
      break;
    case Command::EchoReply:
      break;
    default:
      break;
  }
}

// ---------------------------------------------------------------------------
// Resolution.

void ClientSession::resolve(const std::string& pv, std::function<void(ResolveResult)> done) {
  auto it = probes_.find(pv);
  if (it != probes_.end()) {
    it->second.waiters.push_back(std::move(done));
    return;
  }
  Probe probe;
  probe.verdict.assign(list_.endpoints.size(), -1);
  probe.waiters.push_back(std::move(done));
  probe.timeout = reactor_.schedule(resolve_timeout_ms * net::kNsPerMs, [this, pv]() {
    auto pit = probes_.find(pv);
    if (pit == probes_.end()) return;
    for (auto& v : pit->second.verdict) {
      if (v < 0) v = 0;  // silence counts as a miss
    }
    finish_probe(pv);
  });
  probes_.emplace(pv, std::move(probe));

  // Probe every endpoint; the decision is by list order, never by reply
  // timing.
  for (std::size_t k = 0; k < list_.endpoints.size(); ++k) {
    ensure_peer(k, [this, pv, k](bool up) {
      auto pit = probes_.find(pv);
      if (pit == probes_.end()) return;
      if (!up) {
        probe_done(pv, k, false);
        return;
      }
      Peer& p = peers_[k];
      const std::uint32_t cid = p.next_cid++;
      p.pending_search[cid] = pv;
      send_peer(k, Frame(Command::Search, cid, proto::search_payload(pv)));
    });
  }
}

void ClientSession::probe_done(const std::string& pv, std::size_t k, bool ok) {
  auto it = probes_.find(pv);
  if (it == probes_.end()) return;
  if (it->second.verdict[k] == -1) it->second.verdict[k] = ok ? 1 : 0;
  for (int v : it->second.verdict) {
    if (v == -1) return;  // still waiting
  }
  finish_probe(pv);
}

void ClientSession::finish_probe(const std::string& pv) {
  auto it = probes_.find(pv);
  if (it == probes_.end()) return;
  reactor_.cancel(it->second.timeout);
  Probe probe = std::move(it->second);
  probes_.erase(it);

  int positives = 0;
  int first = -1;
  for (std::size_t k = 0; k < probe.verdict.size(); ++k) {
    if (probe.verdict[k] == 1) {
      ++positives;
      if (first < 0) first = static_cast<int>(k);
    }
  }
  ResolveResult r;
  if (positives == 0) {
    r.status = ClientStatus::NotFound;
  } else if (positives > 1 && list_.strict_duplicates) {
    r.status = ClientStatus::DuplicatePv;
  } else {
    r.status = ClientStatus::Ok;
    r.endpoint = list_.endpoints[static_cast<std::size_t>(first)];
  }
  for (auto& w : probe.waiters) w(r);
}

// ---------------------------------------------------------------------------
// Channels and operations.

void ClientSession::open_channel(std::size_t k, const std::string& pv,
                                 std::function<void(std::optional<std::uint32_t>)> done) {
  ensure_peer(k, [this, k, pv, done = std::move(done)](bool up) {
    if (!up) {
      done(std::nullopt);
      return;
    }
    Peer& p = peers_[k];
    const std::uint32_t cid = p.next_cid++;
    Chan ch;
    ch.pv = pv;
    ch.open_waiters.push_back([done, cid](bool ok) {
      done(ok ? std::optional<std::uint32_t>(cid) : std::nullopt);
    });
    p.chans.emplace(cid, std::move(ch));
    send_peer(k, Frame(Command::CreateChan, cid, proto::create_chan_payload(pv, identity_)));
  });
}

void ClientSession::clear_channel(std::size_t k, std::uint32_t cid) {
  Peer& p = peers_[k];
  auto it = p.chans.find(cid);
  if (it == p.chans.end()) return;
  send_peer(k, Frame(Command::ClearChan, cid));
  p.chans.erase(it);
}

namespace {

template <typename Result, typename Done>
auto once(Done done) {
  auto fired = std::make_shared<bool>(false);
  return [fired, done = std::move(done)](Result r) {
    if (*fired) return;
    *fired = true;
    done(std::move(r));
  };
}

}  // namespace

void ClientSession::get(const std::string& pv, std::function<void(GetResult)> done) {
  auto finish = once<GetResult>(std::move(done));
  resolve(pv, [this, pv, finish](ResolveResult r) {
    if (r.status != ClientStatus::Ok) {
      finish(GetResult{r.status, {}});
      return;
    }
    const std::size_t k = static_cast<std::size_t>(
        std::find(list_.endpoints.begin(), list_.endpoints.end(), r.endpoint) -
        list_.endpoints.begin());
    open_channel(k, pv, [this, k, finish](std::optional<std::uint32_t> cid) {
      if (!cid) {
        finish(GetResult{ClientStatus::AccessDenied, {}});
        return;
      }
      Peer& p = peers_[k];
      auto& ch = p.chans[*cid];
      ch.pending_reads.push_back([this, k, cid, finish](std::optional<proto::ChannelValue> v) {
        clear_channel(k, *cid);
        if (v) {
          finish(GetResult{ClientStatus::Ok, std::move(*v)});
        } else {
          finish(GetResult{ClientStatus::ConnLost, {}});
        }
      });
      send_peer(k, Frame(Command::Read, *cid));
    });
    reactor_.schedule(op_timeout_ms * net::kNsPerMs,
                      [finish]() { finish(GetResult{ClientStatus::Timeout, {}}); });
  });
}

void ClientSession::put(const std::string& pv, const proto::ChannelValue& value,
                        std::function<void(PutResult)> done) {
  auto finish = once<PutResult>(std::move(done));
  resolve(pv, [this, pv, value, finish](ResolveResult r) {
    if (r.status != ClientStatus::Ok) {
      finish(PutResult{r.status});
      return;
    }
    const std::size_t k = static_cast<std::size_t>(
        std::find(list_.endpoints.begin(), list_.endpoints.end(), r.endpoint) -
        list_.endpoints.begin());
    open_channel(k, pv, [this, k, value, finish](std::optional<std::uint32_t> cid) {
      if (!cid) {
        finish(PutResult{ClientStatus::AccessDenied});
        return;
      }
      Peer& p = peers_[k];
      auto& ch = p.chans[*cid];
      ch.pending_writes.push_back([this, k, cid, finish](std::optional<bool> ok) {
        clear_channel(k, *cid);
        if (!ok) {
          finish(PutResult{ClientStatus::ConnLost});
        } else {
          finish(PutResult{*ok ? ClientStatus::Ok : ClientStatus::WriteDenied});
        }
      });
      send_peer(k, Frame(Command::Write, *cid, proto::value_payload(value)));
    });
    reactor_.schedule(op_timeout_ms * net::kNsPerMs,
                      [finish]() { finish(PutResult{ClientStatus::Timeout}); });
  });
}

std::uint64_t ClientSession::monitor(const std::string& pv, MonitorSink sink,
                                     MonitorDone done) {
  const std::uint64_t id = next_monitor_++;
  Monitor mon;
  mon.pv = pv;
  mon.sink = std::move(sink);
  mon.done = std::move(done);
  monitors_.emplace(id, std::move(mon));

  resolve(pv, [this, pv, id](ResolveResult r) {
    auto mit = monitors_.find(id);
    if (mit == monitors_.end()) return;  // cancelled while resolving
    if (r.status != ClientStatus::Ok) {
      auto done = std::move(mit->second.done);
      monitors_.erase(mit);
      if (done) done(r.status);
      return;
    }
    const std::size_t k = static_cast<std::size_t>(
        std::find(list_.endpoints.begin(), list_.endpoints.end(), r.endpoint) -
        list_.endpoints.begin());
    monitors_[id].peer = k;
    open_channel(k, pv, [this, k, id](std::optional<std::uint32_t> cid) {
      auto mit2 = monitors_.find(id);
      if (mit2 == monitors_.end()) {
        if (cid) clear_channel(k, *cid);
        return;
      }
      if (!cid) {
        auto done = std::move(mit2->second.done);
        monitors_.erase(mit2);
        if (done) done(ClientStatus::AccessDenied);
        return;
      }
      mit2->second.cid = *cid;
      mit2->second.live = true;
      peers_[k].chans[*cid].monitor = id;
      send_peer(k, Frame(Command::EventAdd, *cid));
    });
  });
  return id;
}

void ClientSession::cancel_monitor(std::uint64_t id) {
  auto it = monitors_.find(id);
  if (it == monitors_.end()) return;
  const Monitor mon = std::move(it->second);
  monitors_.erase(it);  // no deliveries after cancel returns
  if (mon.live) {
    send_peer(mon.peer, Frame(Command::EventCancel, mon.cid));
    clear_channel(mon.peer, mon.cid);
  }
}

}  // namespace pvgate::client
