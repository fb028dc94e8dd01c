#include "pvgate/ioc/ioc_server.hpp"

#include <algorithm>

namespace pvgate::ioc {

using proto::Command;
using proto::Frame;

namespace {
constexpr int kBaseFds = 4;  // listener + stdin/stdout/stderr
}

const std::vector<std::string>& IocServer::stat_suffixes() {
  static const std::vector<std::string> kSuffixes = {
      "fds", "connections", "cpu_proxy", "event_rate", "msgs_in_rate", "refused"};
  return kSuffixes;
}

IocServer::IocServer(net::Reactor& reactor, IocConfig cfg, std::vector<PvRecord> db,
                     acf::Config acl)
    : reactor_(reactor),
      cfg_(std::move(cfg)),
      db_(std::move(db)),
      acl_(std::move(acl)),
      msgs_in_(cfg_.stats_window_s),
      event_posts_(cfg_.stats_window_s) {
  for (std::size_t i = 0; i < db_.size(); ++i) {
    index_[db_[i].name] = static_cast<int>(i);
  }
  subs_.resize(db_.size());
}

IocServer::~IocServer() {
  if (running_) stop();
}

bool IocServer::start() {
  auto bound = reactor_.listen(cfg_.listen, [this](net::ConnectionPtr c) {
    on_accept(std::move(c));
  });
  if (!bound) return false;
  bound_ = *bound;
  running_ = true;

  // One repeating timer per distinct generator period.
  std::set<std::uint32_t> periods;
  for (const auto& rec : db_) periods.insert(rec.period_ms);
  for (std::uint32_t p : periods) {
    auto fire = std::make_shared<std::function<void()>>();
    *fire = [this, p, fire]() {
      if (!running_) return;
      tick_group(p);
      tick_timers_[p] = reactor_.schedule(p * net::kNsPerMs, *fire);
    };
    tick_timers_[p] = reactor_.schedule(p * net::kNsPerMs, *fire);
  }
  auto stats_fire = std::make_shared<std::function<void()>>();
  *stats_fire = [this, stats_fire]() {
    if (!running_) return;
    stats_tick();
    stats_timer_ = reactor_.schedule(net::kNsPerSec, *stats_fire);
  };
  stats_timer_ = reactor_.schedule(net::kNsPerSec, *stats_fire);
  return true;
}

void IocServer::stop() {
  if (!running_) return;
  running_ = false;
  reactor_.unlisten(bound_);
  for (auto& [p, id] : tick_timers_) reactor_.cancel(id);
  tick_timers_.clear();
  reactor_.cancel(stats_timer_);
  for (auto& [id, cs] : conns_) {
    cs.conn->set_handler(nullptr);
    cs.conn->close();
  }
  conns_.clear();
  for (auto& s : subs_) s.clear();
  for (auto& s : stat_subs_) s.clear();
}

void IocServer::kill_silently() {
  if (!running_) return;
  running_ = false;
  reactor_.unlisten(bound_);
  for (auto& [p, id] : tick_timers_) reactor_.cancel(id);
  tick_timers_.clear();
  reactor_.cancel(stats_timer_);
  for (auto& [id, cs] : conns_) {
    cs.conn->set_handler(nullptr);
    cs.conn->sever();
  }
  conns_.clear();
}

std::uint64_t IocServer::now_ms() const { return reactor_.now_ns() / net::kNsPerMs; }

std::uint64_t IocServer::stamp(std::uint64_t t_ms) const {
  return cfg_.timestamp_epoch_ns + t_ms * net::kNsPerMs;
}

double IocServer::cpu_proxy_now() const {
  const auto now = reactor_.now_ns();
  const double total = msgs_in_.rate_per_sec(now) + event_posts_.rate_per_sec(now);
  if (cfg_.capacity_msgs_per_sec <= 0) return 1.0;
  return std::min(1.0, total / cfg_.capacity_msgs_per_sec);
}

IocStats IocServer::stats() const {
  IocStats s;
  s.connections = conns_.size();
  s.fds = kBaseFds + conns_.size();
  const auto now = reactor_.now_ns();
  s.event_posts_per_sec = event_posts_.rate_per_sec(now);
  s.msgs_in_per_sec = msgs_in_.rate_per_sec(now);
  s.cpu_proxy = cpu_proxy_now();
  s.refused_connections = refused_;
  s.degraded = degraded_;
  return s;
}

void IocServer::on_accept(net::ConnectionPtr conn) {
  if (!running_) {
    conn->close();
    return;
  }
  // fd model: accepting must keep 4 + connections within the limit.
  if (kBaseFds + static_cast<int>(conns_.size()) + 1 > cfg_.fd_limit) {
    ++refused_;
    conn->close();
    return;
  }
  conn->set_handler(this);
  conns_[conn->id()].conn = std::move(conn);
}

void IocServer::on_data(net::Connection& c, std::span<const std::uint8_t> data) {
  auto it = conns_.find(c.id());
  if (it == conns_.end()) return;
  it->second.reader.feed(data);
  // While degraded the IOC is hung: input queues unprocessed.
  if (!degraded_) process_frames(c.id());
}

void IocServer::on_closed(net::Connection& c) { drop_connection(c.id()); }

void IocServer::drop_connection(std::uint64_t conn_id) {
  auto it = conns_.find(conn_id);
  if (it == conns_.end()) return;
  for (auto& [cid, ch] : it->second.channels) {
    if (!ch.subscribed) continue;
    if (ch.pv >= 0) {
      subs_[ch.pv].erase({conn_id, cid});
    } else {
      stat_subs_[-(ch.pv + 1)].erase({conn_id, cid});
    }
  }
  it->second.conn->set_handler(nullptr);
  it->second.conn->close();
  conns_.erase(it);
}

void IocServer::process_frames(std::uint64_t conn_id) {
  for (;;) {
    auto it = conns_.find(conn_id);
    if (it == conns_.end()) return;
    Frame f;
    auto st = it->second.reader.next(f);
    if (st == proto::FrameDecodeStatus::NeedMore) return;
    if (st != proto::FrameDecodeStatus::Ok) {
      drop_connection(conn_id);  // BAD_MAGIC / BAD_VERSION
      return;
    }
    dispatch(it->second, f);
    if (degraded_) return;  // a frame may have pushed us over the edge
  }
}

void IocServer::send(ConnState& cs, const Frame& f) {
  cs.conn->send(proto::encode_frame(f));
}

int IocServer::find_pv(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int IocServer::find_stat(const std::string& name) const {
  const std::string prefix = cfg_.name + ":stats:";
  if (name.rfind(prefix, 0) != 0) return -1;
  const std::string suffix = name.substr(prefix.size());
  const auto& all = stat_suffixes();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] == suffix) return static_cast<int>(i);
  }
  return -1;
}

proto::ChannelValue IocServer::stat_value(int stat) const {
  IocStats s = stats();
  double v = 0;
  switch (stat) {
    case 0: v = static_cast<double>(s.fds); break;
    case 1: v = static_cast<double>(s.connections); break;
    case 2: v = s.cpu_proxy; break;
    case 3: v = s.event_posts_per_sec; break;
    case 4: v = s.msgs_in_per_sec; break;
    case 5: v = static_cast<double>(s.refused_connections); break;
  }
  return proto::ChannelValue::make_double(v, proto::Severity::None, stamp(now_ms()));
}

void IocServer::dispatch(ConnState& cs, const Frame& f) {
  msgs_in_.record(reactor_.now_ns());
  if (!proto::command_known(f.command)) {
    drop_connection(cs.conn->id());
    return;
  }
  switch (f.cmd()) {
    case Command::Search: {
      auto pv = proto::parse_search(f);
      if (!pv) {
        drop_connection(cs.conn->id());
        return;
      }
      int idx = find_pv(*pv);
      if (idx >= 0) {
        send(cs, Frame(Command::SearchOk, f.cid, proto::search_ok_payload(db_[idx].asg)));
      } else if (find_stat(*pv) >= 0) {
        send(cs, Frame(Command::SearchOk, f.cid, proto::search_ok_payload("DEFAULT")));
      } else {
        send(cs, Frame(Command::SearchFail, f.cid));
      }
      break;
    }
    case Command::CreateChan: {
      auto req = proto::parse_create_chan(f);
      if (!req) {
        drop_connection(cs.conn->id());
        return;
      }
      int idx = find_pv(req->pv);
      int stat = idx < 0 ? find_stat(req->pv) : -1;
      if (idx < 0 && stat < 0) {
        send(cs, Frame(Command::ChanFail, f.cid));
        return;
      }
      const std::string& asg = idx >= 0 ? db_[idx].asg : "DEFAULT";
      // WRITE implies READ, so a channel without read rights has no
      // rights at all and is refused outright.
      if (!acf::evaluate(acl_, asg, req->who, acf::Level::Read)) {
        send(cs, Frame(Command::ChanFail, f.cid));
        return;
      }
      Channel ch;
      ch.pv = idx >= 0 ? idx : -(1 + stat);
      ch.who = req->who;
      ch.writable =
          idx >= 0 && acf::evaluate(acl_, asg, req->who, acf::Level::Write).allow;
      cs.channels[f.cid] = ch;
      send(cs, Frame(Command::ChanOk, f.cid,
                     proto::chan_ok_payload(true, ch.writable, asg)));
      break;
    }
    case Command::Read: {
      auto ch = cs.channels.find(f.cid);
      if (ch == cs.channels.end()) {
        send(cs, Frame(Command::ChanFail, f.cid));
        return;
      }
      proto::ChannelValue v = ch->second.pv >= 0 ? db_[ch->second.pv].current
                                                 : stat_value(-(ch->second.pv + 1));
      send(cs, Frame(Command::ReadReply, f.cid, proto::value_payload(v)));
      break;
    }
    case Command::Write: {
      auto ch = cs.channels.find(f.cid);
      if (ch == cs.channels.end()) {
        send(cs, Frame(Command::ChanFail, f.cid));
        return;
      }
      auto v = proto::parse_value_payload(f);
      if (!v) {
        drop_connection(cs.conn->id());
        return;
      }
      if (ch->second.pv < 0 || !ch->second.writable) {
        send(cs, Frame(Command::WriteDenied, f.cid));
        return;
      }
      PvRecord& rec = db_[ch->second.pv];
      if (v->dtype() != rec.dtype) {
        send(cs, Frame(Command::ChanFail, f.cid));
        return;
      }
      rec.current = *v;
      rec.current.timestamp_ns = stamp(now_ms());
      send(cs, Frame(Command::WriteOk, f.cid));
      post_event(ch->second.pv);  // a write is a change
      break;
    }
    case Command::EventAdd: {
      auto ch = cs.channels.find(f.cid);
      if (ch == cs.channels.end()) {
        send(cs, Frame(Command::ChanFail, f.cid));
        return;
      }
      ch->second.subscribed = true;
      const SubKey key{cs.conn->id(), f.cid};
      proto::ChannelValue v;
      if (ch->second.pv >= 0) {
        subs_[ch->second.pv].insert(key);
        v = db_[ch->second.pv].current;
      } else {
        stat_subs_[-(ch->second.pv + 1)].insert(key);
        v = stat_value(-(ch->second.pv + 1));
      }
      // A new monitor gets the current value immediately.
      event_posts_.record(reactor_.now_ns());
      send(cs, Frame(Command::Event, f.cid, proto::value_payload(v)));
      break;
    }
    case Command::EventCancel: {
      auto ch = cs.channels.find(f.cid);
      if (ch == cs.channels.end()) return;
      ch->second.subscribed = false;
      if (ch->second.pv >= 0) {
        subs_[ch->second.pv].erase({cs.conn->id(), f.cid});
      } else {
        stat_subs_[-(ch->second.pv + 1)].erase({cs.conn->id(), f.cid});
      }
      break;
    }
    case Command::ClearChan: {
      auto ch = cs.channels.find(f.cid);
      if (ch == cs.channels.end()) return;
      if (ch->second.subscribed) {
        if (ch->second.pv >= 0) {
          subs_[ch->second.pv].erase({cs.conn->id(), f.cid});
        } else {
          stat_subs_[-(ch->second.pv + 1)].erase({cs.conn->id(), f.cid});
        }
      }
      cs.channels.erase(ch);
      break;
    }
    case Command::Echo:
      send(cs, Frame(Command::EchoReply, f.cid));
      break;
    default:
      // Reply commands are not valid requests.
      drop_connection(cs.conn->id());
      return;
  }
  // Entering saturation mid-burst freezes further processing.
  if (!degraded_ && cpu_proxy_now() >= 1.0) degraded_ = true;
}

void IocServer::post_event(int pv) {
  if (degraded_) return;
  const PvRecord& rec = db_[pv];
  for (const auto& [conn_id, cid] : subs_[pv]) {
    auto it = conns_.find(conn_id);
    if (it == conns_.end()) continue;
    event_posts_.record(reactor_.now_ns());
    send(it->second, Frame(Command::Event, cid, proto::value_payload(rec.current)));
  }
}

void IocServer::tick_group(std::uint32_t period_ms) {
  const std::uint64_t t = now_ms();
  for (std::size_t i = 0; i < db_.size(); ++i) {
    if (db_[i].period_ms != period_ms) continue;
    generator_step(db_[i], t);
    db_[i].current.timestamp_ns = stamp(t);
    if (!degraded_) post_event(static_cast<int>(i));
  }
}

void IocServer::stats_tick() {
  const double cpu = cpu_proxy_now();
  if (!degraded_ && cpu >= 1.0) {
    degraded_ = true;
  } else if (degraded_ && cpu < 1.0) {
    degraded_ = false;
    // Work through whatever queued while we were hung.
    std::vector<std::uint64_t> ids;
    ids.reserve(conns_.size());
    for (const auto& [id, cs] : conns_) ids.push_back(id);
    for (auto id : ids) {
      if (degraded_) break;
      process_frames(id);
    }
  }
  if (degraded_) return;
  for (std::size_t stat = 0; stat < 6; ++stat) {
    if (stat_subs_[stat].empty()) continue;
    auto v = stat_value(static_cast<int>(stat));
    for (const auto& [conn_id, cid] : stat_subs_[stat]) {
      auto it = conns_.find(conn_id);
      if (it == conns_.end()) continue;
      event_posts_.record(reactor_.now_ns());
      send(it->second, Frame(Command::Event, cid, proto::value_payload(v)));
    }
  }
}

}  // namespace pvgate::ioc
