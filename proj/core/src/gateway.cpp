#include "pvgate/gw/gateway.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace pvgate::gw {

using proto::Command;
using proto::Frame;

const std::vector<std::string>& Gateway::stat_suffixes() {
  static const std::vector<std::string> kSuffixes = {
      "alive_pvs", "active_pvs", "client_count", "server_count",
      "event_rate", "post_rate", "existtest_rate", "fd_count"};
  return kSuffixes;
}

acf::Config load_merged_acf(const std::vector<std::string>& paths, acf::MergeMode mode) {
  std::vector<acf::Config> configs;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ACF file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    configs.push_back(acf::parse_acf(ss.str()));
  }
  if (configs.empty()) throw std::runtime_error("no ACF files given");
  return acf::merge_acf(configs, mode);
}

Gateway::Gateway(net::Reactor& reactor, GatewayConfig cfg)
    : reactor_(reactor),
      cfg_(std::move(cfg)),
      event_rate_(cfg_.stats_window_s),
      post_rate_(cfg_.stats_window_s),
      existtest_rate_(cfg_.stats_window_s) {
  if (cfg_.upstreams.empty()) {
    throw std::invalid_argument("gateway needs at least one upstream");
  }
  cfg_.access.asgs.try_emplace("DEFAULT");
  ups_.resize(cfg_.upstreams.size());
}

Gateway::~Gateway() {
  if (running_) stop();
}

bool Gateway::start() {
  auto bound = reactor_.listen(cfg_.listen, [this](net::ConnectionPtr c) {
    on_accept(std::move(c));
  });
  if (!bound) return false;
  bound_ = *bound;
  running_ = true;

  auto repeat = [this](std::uint64_t period_ns, void (Gateway::*fn)(),
                       net::TimerId& slot) {
    auto fire = std::make_shared<std::function<void()>>();
    *fire = [this, period_ns, fn, fire, &slot]() {
      if (!running_) return;
      (this->*fn)();
      slot = reactor_.schedule(period_ns, *fire);
    };
    slot = reactor_.schedule(period_ns, *fire);
  };
  repeat(net::kNsPerSec, &Gateway::hold_tick, hold_timer_);
  repeat(net::kNsPerSec, &Gateway::stats_tick, stats_timer_);
  repeat(net::kNsPerSec, &Gateway::heartbeat_tick, hb_timer_);
  if (cfg_.poll_ms > 0) {
    repeat(cfg_.poll_ms * net::kNsPerMs, &Gateway::poll_tick, poll_timer_);
  }
  return true;
}

void Gateway::stop() {
  if (!running_) return;
  running_ = false;
  reactor_.unlisten(bound_);
  reactor_.cancel(hold_timer_);
  reactor_.cancel(stats_timer_);
  reactor_.cancel(hb_timer_);
  reactor_.cancel(poll_timer_);
  for (auto& [pv, id] : reresolve_timers_) reactor_.cancel(id);
  reresolve_timers_.clear();
  for (auto& [pv, job] : jobs_) reactor_.cancel(job.timeout);
  jobs_.clear();
  for (auto& [id, d] : downs_) {
    d.conn->set_handler(nullptr);
    d.conn->close();
  }
  downs_.clear();
  for (auto& u : ups_) {
    if (u.conn) {
      u.conn->set_handler(nullptr);
      u.conn->close();
    }
    u = Upstream{};
  }
  up_by_conn_.clear();
  entries_.clear();
}

void Gateway::kill_silently() {
  if (!running_) return;
  running_ = false;
  reactor_.unlisten(bound_);
  reactor_.cancel(hold_timer_);
  reactor_.cancel(stats_timer_);
  reactor_.cancel(hb_timer_);
  reactor_.cancel(poll_timer_);
  for (auto& [pv, id] : reresolve_timers_) reactor_.cancel(id);
  reresolve_timers_.clear();
  for (auto& [pv, job] : jobs_) reactor_.cancel(job.timeout);
  jobs_.clear();
  for (auto& [id, d] : downs_) {
    d.conn->set_handler(nullptr);
    d.conn->sever();
  }
  downs_.clear();
  for (auto& u : ups_) {
    if (u.conn) {
      u.conn->set_handler(nullptr);
      u.conn->sever();
    }
    u = Upstream{};
  }
  up_by_conn_.clear();
}

GatewayStats Gateway::stats() const {
  GatewayStats s;
  for (const auto& [pv, e] : entries_) {
    if (e.state == CacheState::Active) {
      ++s.active_pvs;
      ++s.alive_pvs;
    } else if (e.state == CacheState::Inactive) {
      ++s.alive_pvs;
    }
  }
  s.client_count = downs_.size();
  for (const auto& u : ups_) {
    if (u.state == Upstream::State::Up) ++s.server_count;
  }
  s.fd_count = 4 + s.client_count + s.server_count;
  const auto now = reactor_.now_ns();
  s.event_rate = event_rate_.rate_per_sec(now);
  s.post_rate = post_rate_.rate_per_sec(now);
  s.existtest_rate = existtest_rate_.rate_per_sec(now);
  return s;
}

std::optional<CacheState> Gateway::entry_state(const std::string& pv) const {
  auto it = entries_.find(pv);
  if (it == entries_.end()) return std::nullopt;
  return it->second.state;
}

std::optional<std::uint64_t> Gateway::entry_hold_deadline_ns(const std::string& pv) const {
  auto it = entries_.find(pv);
  if (it == entries_.end()) return std::nullopt;
  return it->second.hold_deadline_ns;
}

int Gateway::find_stat(const std::string& pv) const {
  if (pv.rfind(cfg_.stats_prefix, 0) != 0) return -1;
  const std::string suffix = pv.substr(cfg_.stats_prefix.size());
  const auto& all = stat_suffixes();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] == suffix) return static_cast<int>(i);
  }
  return -1;
}

proto::ChannelValue Gateway::stat_value(int stat) const {
  GatewayStats s = stats();
  double v = 0;
  switch (stat) {
    case 0: v = static_cast<double>(s.alive_pvs); break;
    case 1: v = static_cast<double>(s.active_pvs); break;
    case 2: v = static_cast<double>(s.client_count); break;
    case 3: v = static_cast<double>(s.server_count); break;
    case 4: v = s.event_rate; break;
    case 5: v = s.post_rate; break;
    case 6: v = s.existtest_rate; break;
    case 7: v = static_cast<double>(s.fd_count); break;
  }
  return proto::ChannelValue::make_double(
      v, proto::Severity::None, cfg_.timestamp_epoch_ns + reactor_.now_ns());
}

// ---------------------------------------------------------------------------
// Downstream side.

void Gateway::on_accept(net::ConnectionPtr conn) {
  if (!running_) {
    conn->close();
    return;
  }
  conn->set_handler(this);
  downs_[conn->id()].conn = std::move(conn);
}

void Gateway::on_data(net::Connection& c, std::span<const std::uint8_t> data) {
  int u = upstream_index(c.id());
  if (u >= 0) {
    auto& up = ups_[static_cast<std::size_t>(u)];
    up.last_rx_ns = reactor_.now_ns();
    up.echo_outstanding = false;
    up.reader.feed(data);
    up_frames(static_cast<std::size_t>(u));
    return;
  }
  auto it = downs_.find(c.id());
  if (it == downs_.end()) return;
  it->second.reader.feed(data);
  down_frames(c.id());
}

void Gateway::on_closed(net::Connection& c) {
  int u = upstream_index(c.id());
  if (u >= 0) {
    upstream_lost(static_cast<std::size_t>(u));
    return;
  }
  drop_down(c.id());
}

int Gateway::upstream_index(std::uint64_t conn_id) const {
  auto it = up_by_conn_.find(conn_id);
  return it == up_by_conn_.end() ? -1 : static_cast<int>(it->second);
}

void Gateway::down_frames(std::uint64_t conn_id) {
  for (;;) {
    auto it = downs_.find(conn_id);
    if (it == downs_.end()) return;
    Frame f;
    auto st = it->second.reader.next(f);
    if (st == proto::FrameDecodeStatus::NeedMore) return;
    if (st != proto::FrameDecodeStatus::Ok) {
      drop_down(conn_id);
      return;
    }
    down_dispatch(it->second, f);
  }
}

void Gateway::send_down(Down& d, const Frame& f) { d.conn->send(proto::encode_frame(f)); }

void Gateway::drop_down(std::uint64_t conn_id) {
  auto it = downs_.find(conn_id);
  if (it == downs_.end()) return;
  for (auto& [cid, ch] : it->second.channels) {
    if (!ch.subscribed) continue;
    if (ch.stat >= 0) {
      stat_subs_[static_cast<std::uint32_t>(ch.stat)].erase({conn_id, cid});
    } else {
      apply(ch.pv, EvUnsubscribe{SubscriberKey{conn_id, cid}});
    }
  }
  it->second.conn->set_handler(nullptr);
  it->second.conn->close();
  downs_.erase(it);
}

void Gateway::down_dispatch(Down& d, const Frame& f) {
  const std::uint64_t conn_id = d.conn->id();
  if (!proto::command_known(f.command)) {
    drop_down(conn_id);
    return;
  }
  switch (f.cmd()) {
    case Command::Search: {
      auto pv = proto::parse_search(f);
      if (!pv) {
        drop_down(conn_id);
        return;
      }
      existtest_rate_.record(reactor_.now_ns());
      if (find_stat(*pv) >= 0) {
        send_down(d, Frame(Command::SearchOk, f.cid, proto::search_ok_payload("DEFAULT")));
        return;
      }
      const std::uint32_t cid = f.cid;
      resolve_pv(*pv, [this, conn_id, cid, pv = *pv](bool ok) {
        auto it = downs_.find(conn_id);
        if (it == downs_.end()) return;
        if (ok) {
          send_down(it->second, Frame(Command::SearchOk, cid,
                                      proto::search_ok_payload(res_cache_[pv].asg)));
        } else {
          send_down(it->second, Frame(Command::SearchFail, cid));
        }
      });
      break;
    }
    case Command::CreateChan: {
      auto req = proto::parse_create_chan(f);
      if (!req) {
        drop_down(conn_id);
        return;
      }
      int stat = find_stat(req->pv);
      if (stat >= 0) {
        DownChannel ch;
        ch.pv = req->pv;
        ch.who = req->who;
        ch.asg = "DEFAULT";
        ch.stat = stat;
        d.channels[f.cid] = ch;
        send_down(d, Frame(Command::ChanOk, f.cid,
                           proto::chan_ok_payload(true, false, "DEFAULT")));
        return;
      }
      const std::uint32_t cid = f.cid;
      resolve_pv(req->pv, [this, conn_id, cid, req = *req](bool ok) {
        auto it = downs_.find(conn_id);
        if (it == downs_.end()) return;
        if (!ok) {
          send_down(it->second, Frame(Command::ChanFail, cid));
          return;
        }
        const std::string asg = res_cache_[req.pv].asg;
        // The decision is made here, against the client's own identity;
        // everything the gateway does upstream happens as the gateway.
        if (!acf::evaluate(cfg_.access, asg, req.who, acf::Level::Read)) {
          send_down(it->second, Frame(Command::ChanFail, cid));
          return;
        }
        DownChannel ch;
        ch.pv = req.pv;
        ch.who = req.who;
        ch.asg = asg;
        ch.writable = acf::evaluate(cfg_.access, asg, req.who, acf::Level::Write).allow;
        it->second.channels[cid] = ch;
        send_down(it->second,
                  Frame(Command::ChanOk, cid, proto::chan_ok_payload(true, ch.writable, asg)));
      });
      break;
    }
    case Command::Read: {
      auto ch = d.channels.find(f.cid);
      if (ch == d.channels.end()) {
        send_down(d, Frame(Command::ChanFail, f.cid));
        return;
      }
      if (ch->second.stat >= 0) {
        send_down(d, Frame(Command::ReadReply, f.cid,
                           proto::value_payload(stat_value(ch->second.stat))));
        return;
      }
      const std::uint32_t cid = f.cid;
      do_read(ch->second.pv, [this, conn_id, cid](ReadOutcome out) {
        auto it = downs_.find(conn_id);
        if (it == downs_.end()) return;
        if (out.status == ReadStatus::Ok) {
          send_down(it->second,
                    Frame(Command::ReadReply, cid, proto::value_payload(out.value)));
        } else {
          send_down(it->second, Frame(Command::ChanFail, cid));
        }
      });
      break;
    }
    case Command::Write: {
      auto ch = d.channels.find(f.cid);
      if (ch == d.channels.end()) {
        send_down(d, Frame(Command::ChanFail, f.cid));
        return;
      }
      auto v = proto::parse_value_payload(f);
      if (!v) {
        drop_down(conn_id);
        return;
      }
      if (ch->second.stat >= 0 || !ch->second.writable) {
        // Denied at the edge: no upstream traffic for this write.
        send_down(d, Frame(Command::WriteDenied, f.cid));
        return;
      }
      const std::uint32_t cid = f.cid;
      do_write(ch->second.pv, *v, [this, conn_id, cid](WriteOutcome out) {
        auto it = downs_.find(conn_id);
        if (it == downs_.end()) return;
        switch (out) {
          case WriteOutcome::Ok:
            send_down(it->second, Frame(Command::WriteOk, cid));
            break;
          case WriteOutcome::Denied:
            send_down(it->second, Frame(Command::WriteDenied, cid));
            break;
          default:
            send_down(it->second, Frame(Command::ChanFail, cid));
            break;
        }
      });
      break;
    }
    case Command::EventAdd: {
      auto ch = d.channels.find(f.cid);
      if (ch == d.channels.end()) {
        send_down(d, Frame(Command::ChanFail, f.cid));
        return;
      }
      ch->second.subscribed = true;
      const SubscriberKey key{conn_id, f.cid};
      if (ch->second.stat >= 0) {
        stat_subs_[static_cast<std::uint32_t>(ch->second.stat)].insert(key);
        post_rate_.record(reactor_.now_ns());
        send_down(d, Frame(Command::Event, f.cid,
                           proto::value_payload(stat_value(ch->second.stat))));
        return;
      }
      int upstream = -1;
      if (auto rit = res_cache_.find(ch->second.pv); rit != res_cache_.end()) {
        upstream = rit->second.upstream;
      }
      auto& entry = ensure_entry(ch->second.pv, upstream, ch->second.asg);
      const bool fresh = entry.state == CacheState::Connecting;
      apply(ch->second.pv, EvSubscribe{key});
      if (fresh) ensure_subscribed(ch->second.pv);
      break;
    }
    case Command::EventCancel: {
      auto ch = d.channels.find(f.cid);
      if (ch == d.channels.end() || !ch->second.subscribed) return;
      ch->second.subscribed = false;
      if (ch->second.stat >= 0) {
        stat_subs_[static_cast<std::uint32_t>(ch->second.stat)].erase({conn_id, f.cid});
      } else {
        apply(ch->second.pv, EvUnsubscribe{SubscriberKey{conn_id, f.cid}});
      }
      break;
    }
    case Command::ClearChan: {
      auto ch = d.channels.find(f.cid);
      if (ch == d.channels.end()) return;
      if (ch->second.subscribed) {
        if (ch->second.stat >= 0) {
          stat_subs_[static_cast<std::uint32_t>(ch->second.stat)].erase({conn_id, f.cid});
        } else {
          apply(ch->second.pv, EvUnsubscribe{SubscriberKey{conn_id, f.cid}});
        }
      }
      d.channels.erase(ch);
      break;
    }
    case Command::Echo:
      send_down(d, Frame(Command::EchoReply, f.cid));
      break;
    default:
      drop_down(conn_id);
      return;
  }
}

// ---------------------------------------------------------------------------
// Resolution.

void Gateway::resolve_pv(const std::string& pv, std::function<void(bool)> done) {
  if (res_cache_.contains(pv)) {
    done(true);
    return;
  }
  auto neg = neg_cache_.find(pv);
  if (neg != neg_cache_.end()) {
    if (reactor_.now_ns() < neg->second) {
      done(false);
      return;
    }
    neg_cache_.erase(neg);
  }
  auto it = jobs_.find(pv);
  if (it != jobs_.end()) {
    it->second.waiters.push_back(std::move(done));
    return;
  }
  ResolveJob job;
  job.waiters.push_back(std::move(done));
  jobs_.emplace(pv, std::move(job));
  probe_next(pv);
}

void Gateway::probe_next(const std::string& pv) {
  auto it = jobs_.find(pv);
  if (it == jobs_.end()) return;
  ResolveJob& job = it->second;
  if (job.next >= ups_.size()) {
    neg_cache_[pv] = reactor_.now_ns() + cfg_.negative_cache_s * net::kNsPerSec;
    finish_resolve(pv, false);
    return;
  }
  const std::size_t k = job.next++;
  job.timeout = reactor_.schedule(cfg_.resolve_timeout_ms * net::kNsPerMs, [this, pv, k]() {
    auto jt = jobs_.find(pv);
    if (jt == jobs_.end()) return;
    // Abandon this upstream for the current job and move on.
    auto& up = ups_[k];
    for (auto sit = up.pending_search.begin(); sit != up.pending_search.end();) {
      if (sit->second == pv) {
        sit = up.pending_search.erase(sit);
      } else {
        ++sit;
      }
    }
    jt->second.probed_failed.push_back(k);
    probe_next(pv);
  });
  ensure_upstream(k, [this, pv, k](bool up) {
    auto jt = jobs_.find(pv);
    if (jt == jobs_.end()) return;
    if (!up) {
      reactor_.cancel(jt->second.timeout);
      jt->second.probed_failed.push_back(k);
      probe_next(pv);
      return;
    }
    auto& upstream = ups_[k];
    const std::uint32_t cid = upstream.next_cid++;
    upstream.pending_search[cid] = pv;
    send_up(k, Frame(Command::Search, cid, proto::search_payload(pv)));
  });
}

void Gateway::finish_resolve(const std::string& pv, bool ok) {
  auto it = jobs_.find(pv);
  if (it == jobs_.end()) return;
  reactor_.cancel(it->second.timeout);
  auto waiters = std::move(it->second.waiters);
  jobs_.erase(it);
  for (auto& w : waiters) w(ok);
  sweep_idle_upstreams();
}

void Gateway::sweep_idle_upstreams() {
  for (std::size_t k = 0; k < ups_.size(); ++k) {
    Upstream& u = ups_[k];
    if (u.state != Upstream::State::Up) continue;
    if (!u.channels.empty() || !u.pending_search.empty()) continue;
    bool referenced = false;
    for (const auto& [pv, res] : res_cache_) {
      if (res.upstream == static_cast<int>(k)) {
        referenced = true;
        break;
      }
    }
    if (referenced) continue;
    up_by_conn_.erase(u.conn->id());
    u.conn->set_handler(nullptr);
    u.conn->close();
    u = Upstream{};
  }
}

// ---------------------------------------------------------------------------
// Upstream plumbing.

void Gateway::ensure_upstream(std::size_t u, std::function<void(bool)> done) {
  Upstream& up = ups_[u];
  switch (up.state) {
    case Upstream::State::Up:
      done(true);
      return;
    case Upstream::State::Connecting:
      up.connect_waiters.push_back(std::move(done));
      return;
    case Upstream::State::Down:
      break;
  }
  up.state = Upstream::State::Connecting;
  up.connect_waiters.push_back(std::move(done));
  reactor_.connect(cfg_.upstreams[u], [this, u](net::ConnectionPtr conn) {
    if (!running_) return;
    Upstream& target = ups_[u];
    if (!conn) {
      target.state = Upstream::State::Down;
      auto waiters = std::move(target.connect_waiters);
      target.connect_waiters.clear();
      for (auto& w : waiters) w(false);
      return;
    }
    upstream_connected(u, std::move(conn));
  });
}

void Gateway::upstream_connected(std::size_t u, net::ConnectionPtr conn) {
  Upstream& up = ups_[u];
  up.state = Upstream::State::Up;
  up.conn = std::move(conn);
  up.reader = proto::FrameReader{};
  up.last_rx_ns = reactor_.now_ns();
  up.echo_outstanding = false;
  up.conn->set_handler(this);
  up_by_conn_[up.conn->id()] = u;
  auto waiters = std::move(up.connect_waiters);
  up.connect_waiters.clear();
  for (auto& w : waiters) w(true);
}

void Gateway::upstream_lost(std::size_t u) {
  Upstream& up = ups_[u];
  if (up.conn) {
    up_by_conn_.erase(up.conn->id());
    up.conn->set_handler(nullptr);
    up.conn->close();
  }
  auto channels = std::move(up.channels);
  auto pending_search = std::move(up.pending_search);
  auto waiters = std::move(up.connect_waiters);
  up = Upstream{};

  for (auto& w : waiters) w(false);
  for (auto& [cid, ch] : channels) {
    for (auto& w : ch.open_waiters) w(false);
    for (auto& r : ch.pending_reads) r(std::nullopt);
    for (auto& wr : ch.pending_writes) wr(std::nullopt);
  }

  // Forget name resolutions through this IOC; re-resolution will probe.
  for (auto it = res_cache_.begin(); it != res_cache_.end();) {
    if (it->second.upstream == static_cast<int>(u)) {
      it = res_cache_.erase(it);
    } else {
      ++it;
    }
  }

  // Outstanding probes continue with the next upstream in order.
  for (auto& [cid, pv] : pending_search) {
    auto jt = jobs_.find(pv);
    if (jt == jobs_.end()) continue;
    reactor_.cancel(jt->second.timeout);
    jt->second.probed_failed.push_back(u);
    probe_next(pv);
  }

  // Entries bound here go stale: mark, tell subscribers, re-resolve.
  std::vector<std::string> bound;
  for (const auto& [pv, e] : entries_) {
    if (e.upstream == static_cast<int>(u)) bound.push_back(pv);
  }
  for (const auto& pv : bound) apply(pv, EvUpstreamLost{});
}

void Gateway::send_up(std::size_t u, const Frame& f) {
  Upstream& up = ups_[u];
  if (up.state != Upstream::State::Up || !up.conn) return;
  up.conn->send(proto::encode_frame(f));
}

void Gateway::up_frames(std::size_t u) {
  for (;;) {
    Upstream& up = ups_[u];
    if (up.state != Upstream::State::Up) return;
    Frame f;
    auto st = up.reader.next(f);
    if (st == proto::FrameDecodeStatus::NeedMore) return;
    if (st != proto::FrameDecodeStatus::Ok) {
      upstream_lost(u);
      return;
    }
    up_dispatch(u, f);
  }
}

void Gateway::up_dispatch(std::size_t u, const Frame& f) {
  Upstream& up = ups_[u];
  switch (f.cmd()) {
    case Command::SearchOk:
    case Command::SearchFail: {
      auto sit = up.pending_search.find(f.cid);
      if (sit == up.pending_search.end()) return;
      const std::string pv = sit->second;
      up.pending_search.erase(sit);
      auto jt = jobs_.find(pv);
      if (jt == jobs_.end()) return;
      reactor_.cancel(jt->second.timeout);
      if (f.cmd() == Command::SearchOk) {
        auto asg = proto::parse_search_ok(f);
        res_cache_[pv] = Resolved{static_cast<int>(u), asg.value_or("DEFAULT")};
        finish_resolve(pv, true);
      } else {
        jt->second.probed_failed.push_back(u);
        probe_next(pv);
      }
      break;
    }
    case Command::ChanOk: {
      auto cit = up.channels.find(f.cid);
      if (cit == up.channels.end()) return;
      cit->second.open = true;
      auto eit = entries_.find(cit->second.pv);
      if (eit != entries_.end()) eit->second.upstream_cid = f.cid;
      auto waiters = std::move(cit->second.open_waiters);
      cit->second.open_waiters.clear();
      for (auto& w : waiters) w(true);
      ensure_subscribed(cit->second.pv);
      break;
    }
    case Command::ChanFail: {
      auto cit = up.channels.find(f.cid);
      if (cit == up.channels.end()) return;
      const std::string pv = cit->second.pv;
      auto waiters = std::move(cit->second.open_waiters);
      auto reads = std::move(cit->second.pending_reads);
      auto writes = std::move(cit->second.pending_writes);
      up.chan_by_pv.erase(pv);
      up.channels.erase(cit);
      for (auto& w : waiters) w(false);
      for (auto& r : reads) r(std::nullopt);
      for (auto& wr : writes) wr(std::nullopt);
      // The IOC no longer honors this PV; drop the stale resolution.
      res_cache_.erase(pv);
      if (entries_.contains(pv)) schedule_reresolve(pv);
      break;
    }
    case Command::Event: {
      auto cit = up.channels.find(f.cid);
      if (cit == up.channels.end()) return;
      auto v = proto::parse_value_payload(f);
      if (!v) return;
      event_rate_.record(reactor_.now_ns());
      apply(cit->second.pv, EvUpstreamEvent{std::move(*v)});
      break;
    }
    case Command::ReadReply: {
      auto cit = up.channels.find(f.cid);
      if (cit == up.channels.end()) return;
      auto v = proto::parse_value_payload(f);
      if (!v) return;
      apply(cit->second.pv, EvUpstreamEvent{*v});
      if (!cit->second.pending_reads.empty()) {
        auto cb = std::move(cit->second.pending_reads.front());
        cit->second.pending_reads.pop_front();
        cb(std::move(*v));
      }
      break;
    }
    case Command::WriteOk:
    case Command::WriteDenied: {
      auto cit = up.channels.find(f.cid);
      if (cit == up.channels.end() || cit->second.pending_writes.empty()) return;
      auto cb = std::move(cit->second.pending_writes.front());
      cit->second.pending_writes.pop_front();
      cb(f.cmd() == Command::WriteOk);
      break;
    }
    case Command::Echo:
      send_up(u, Frame(Command::EchoReply, f.cid));
      break;
    case Command::EchoReply:
      break;  // last_rx already updated
    default:
      break;  // tolerate anything else from an IOC
  }
}

void Gateway::ensure_channel(std::size_t u, const std::string& pv,
                             std::function<void(bool)> done) {
  Upstream& up = ups_[u];
  if (up.state != Upstream::State::Up) {
    done(false);
    return;
  }
  auto byname = up.chan_by_pv.find(pv);
  if (byname != up.chan_by_pv.end()) {
    auto& ch = up.channels[byname->second];
    if (ch.open) {
      done(true);
    } else {
      ch.open_waiters.push_back(std::move(done));
    }
    return;
  }
  const std::uint32_t cid = up.next_cid++;
  UpChannel ch;
  ch.pv = pv;
  ch.open_waiters.push_back(std::move(done));
  up.channels.emplace(cid, std::move(ch));
  up.chan_by_pv[pv] = cid;
  // Always the gateway's identity: secure transactions at the IOC are
  // made by the gateway process, never the originating user.
  send_up(u, Frame(Command::CreateChan, cid,
                   proto::create_chan_payload(pv, cfg_.identity)));
}

void Gateway::ensure_subscribed(const std::string& pv) {
  auto eit = entries_.find(pv);
  if (eit == entries_.end()) return;
  CacheEntry& e = eit->second;
  if (e.subscribers.empty() || e.state == CacheState::Inactive) return;
  if (e.upstream < 0) {
    schedule_reresolve(pv);
    return;
  }
  const auto u = static_cast<std::size_t>(e.upstream);
  ensure_upstream(u, [this, pv, u](bool ok) {
    if (!ok) {
      schedule_reresolve(pv);
      return;
    }
    ensure_channel(u, pv, [this, pv, u](bool open) {
      if (!open) return;  // ChanFail path schedules re-resolution
      auto eit2 = entries_.find(pv);
      if (eit2 == entries_.end()) return;
      CacheEntry& e2 = eit2->second;
      if (e2.subscribers.empty() || e2.state == CacheState::Inactive) return;
      if (cfg_.poll_ms > 0) return;  // poll mode reads instead of subscribing
      Upstream& up = ups_[u];
      auto byname = up.chan_by_pv.find(pv);
      if (byname == up.chan_by_pv.end()) return;
      auto& ch = up.channels[byname->second];
      if (!ch.event_added) {
        ch.event_added = true;
        send_up(u, Frame(Command::EventAdd, byname->second));
      }
    });
  });
}

// ---------------------------------------------------------------------------
// Cache.

CacheEntry& Gateway::ensure_entry(const std::string& pv, int upstream,
                                  const std::string& asg) {
  auto it = entries_.find(pv);
  if (it == entries_.end()) {
    CacheEntry e;
    e.pv = pv;
    e.asg = asg;
    e.upstream = upstream;
    it = entries_.emplace(pv, std::move(e)).first;
  }
  return it->second;
}

void Gateway::apply(const std::string& pv, const CacheEvent& ev) {
  auto it = entries_.find(pv);
  if (it == entries_.end()) return;
  TransitionOut out;
  try {
    out = cache_transition(it->second, ev, reactor_.now_ns(),
                           cfg_.hold_seconds * net::kNsPerSec);
  } catch (const IllegalTransition&) {
    // A bug in the surrounding bookkeeping; abort the entry.
    evict(pv);
    return;
  }
  const bool evicted = out.entry.state == CacheState::Evicted;
  it->second = std::move(out.entry);
  run_actions(pv, out.actions);
  if (evicted) {
    entries_.erase(pv);
    res_cache_.erase(pv);
    sweep_idle_upstreams();
  }
}

void Gateway::run_actions(const std::string& pv, const std::vector<CacheAction>& actions) {
  for (const auto& action : actions) {
    std::visit(
        [&](const auto& act) {
          using T = std::decay_t<decltype(act)>;
          auto eit = entries_.find(pv);
          if constexpr (std::is_same_v<T, ActSendEventAdd>) {
            ensure_subscribed(pv);
          } else if constexpr (std::is_same_v<T, ActSendEventCancel>) {
            if (eit == entries_.end() || eit->second.upstream < 0) return;
            const auto u = static_cast<std::size_t>(eit->second.upstream);
            auto byname = ups_[u].chan_by_pv.find(pv);
            if (byname == ups_[u].chan_by_pv.end()) return;
            auto& ch = ups_[u].channels[byname->second];
            if (ch.event_added) {
              ch.event_added = false;
              send_up(u, Frame(Command::EventCancel, byname->second));
            }
          } else if constexpr (std::is_same_v<T, ActSendClearChan>) {
            if (eit == entries_.end() || eit->second.upstream < 0) return;
            const auto u = static_cast<std::size_t>(eit->second.upstream);
            auto byname = ups_[u].chan_by_pv.find(pv);
            if (byname == ups_[u].chan_by_pv.end()) return;
            send_up(u, Frame(Command::ClearChan, byname->second));
            ups_[u].channels.erase(byname->second);
            ups_[u].chan_by_pv.erase(byname);
          } else if constexpr (std::is_same_v<T, ActPostTo>) {
            post_to(act.sub, act.value);
          } else if constexpr (std::is_same_v<T, ActPostAll>) {
            if (eit == entries_.end()) return;
            for (const auto& sub : eit->second.subscribers) post_to(sub, act.value);
          } else if constexpr (std::is_same_v<T, ActReresolve>) {
            schedule_reresolve(pv);
          }
        },
        action);
  }
}

void Gateway::post_to(const SubscriberKey& sub, const proto::ChannelValue& v) {
  auto it = downs_.find(sub.conn_id);
  if (it == downs_.end()) return;
  post_rate_.record(reactor_.now_ns());
  send_down(it->second, Frame(Command::Event, sub.cid, proto::value_payload(v)));
}

void Gateway::evict(const std::string& pv) {
  auto it = entries_.find(pv);
  if (it == entries_.end()) return;
  if (it->second.upstream >= 0) {
    const auto u = static_cast<std::size_t>(it->second.upstream);
    auto byname = ups_[u].chan_by_pv.find(pv);
    if (byname != ups_[u].chan_by_pv.end()) {
      send_up(u, Frame(Command::ClearChan, byname->second));
      ups_[u].channels.erase(byname->second);
      ups_[u].chan_by_pv.erase(byname);
    }
  }
  entries_.erase(pv);
  res_cache_.erase(pv);
  sweep_idle_upstreams();
}

void Gateway::schedule_reresolve(const std::string& pv) {
  if (reresolve_timers_.contains(pv)) return;
  reresolve_timers_[pv] =
      reactor_.schedule(cfg_.resolve_retry_ms * net::kNsPerMs, [this, pv]() {
        reresolve_timers_.erase(pv);
        auto it = entries_.find(pv);
        if (it == entries_.end()) return;
        resolve_pv(pv, [this, pv](bool ok) {
          auto eit = entries_.find(pv);
          if (eit == entries_.end()) return;
          if (!ok) {
            if (!eit->second.subscribers.empty()) schedule_reresolve(pv);
            return;
          }
          eit->second.upstream = res_cache_[pv].upstream;
          eit->second.asg = res_cache_[pv].asg;
          ensure_subscribed(pv);
        });
      });
}

// ---------------------------------------------------------------------------
// Operation surface.

void Gateway::do_read(const std::string& pv, std::function<void(ReadOutcome)> done) {
  auto eit = entries_.find(pv);
  if (eit != entries_.end() && eit->second.last_value &&
      (eit->second.state == CacheState::Active ||
       eit->second.state == CacheState::Inactive)) {
    done(ReadOutcome{ReadStatus::Ok, *eit->second.last_value});
    return;
  }
  resolve_pv(pv, [this, pv, done = std::move(done)](bool ok) {
    if (!ok) {
      done(ReadOutcome{ReadStatus::NotFound, {}});
      return;
    }
    const Resolved res = res_cache_[pv];
    ensure_entry(pv, res.upstream, res.asg);
    const auto u = static_cast<std::size_t>(res.upstream);
    ensure_upstream(u, [this, pv, u, done](bool up) {
      if (!up) {
        done(ReadOutcome{ReadStatus::UpstreamDown, {}});
        return;
      }
      ensure_channel(u, pv, [this, pv, u, done](bool open) {
        if (!open) {
          done(ReadOutcome{ReadStatus::UpstreamDown, {}});
          return;
        }
        Upstream& upstream = ups_[u];
        auto byname = upstream.chan_by_pv.find(pv);
        if (byname == upstream.chan_by_pv.end()) {
          done(ReadOutcome{ReadStatus::UpstreamDown, {}});
          return;
        }
        auto& ch = upstream.channels[byname->second];
        ch.pending_reads.push_back([done](std::optional<proto::ChannelValue> v) {
          if (v) {
            done(ReadOutcome{ReadStatus::Ok, std::move(*v)});
          } else {
            done(ReadOutcome{ReadStatus::UpstreamDown, {}});
          }
        });
        send_up(u, Frame(Command::Read, byname->second));
      });
    });
  });
}

void Gateway::do_write(const std::string& pv, const proto::ChannelValue& value,
                       std::function<void(WriteOutcome)> done) {
  resolve_pv(pv, [this, pv, value, done = std::move(done)](bool ok) {
    if (!ok) {
      done(WriteOutcome::NotFound);
      return;
    }
    const Resolved res = res_cache_[pv];
    const auto u = static_cast<std::size_t>(res.upstream);
    ensure_upstream(u, [this, pv, u, value, done](bool up) {
      if (!up) {
        done(WriteOutcome::UpstreamDown);
        return;
      }
      ensure_channel(u, pv, [this, pv, u, value, done](bool open) {
        if (!open) {
          done(WriteOutcome::UpstreamDown);
          return;
        }
        Upstream& upstream = ups_[u];
        auto byname = upstream.chan_by_pv.find(pv);
        if (byname == upstream.chan_by_pv.end()) {
          done(WriteOutcome::UpstreamDown);
          return;
        }
        auto& ch = upstream.channels[byname->second];
        ch.pending_writes.push_back([done](std::optional<bool> ok2) {
          if (!ok2) {
            done(WriteOutcome::UpstreamDown);
          } else {
            done(*ok2 ? WriteOutcome::Ok : WriteOutcome::Denied);
          }
        });
        send_up(u, Frame(Command::Write, byname->second, proto::value_payload(value)));
      });
    });
  });
}

void Gateway::serve_read(const std::string& pv, const proto::Identity& who,
                         std::function<void(ReadOutcome)> done) {
  int stat = find_stat(pv);
  if (stat >= 0) {
    if (!acf::evaluate(cfg_.access, "DEFAULT", who, acf::Level::Read)) {
      done(ReadOutcome{ReadStatus::AccessDenied, {}});
    } else {
      done(ReadOutcome{ReadStatus::Ok, stat_value(stat)});
    }
    return;
  }
  auto eit = entries_.find(pv);
  if (eit != entries_.end()) {
    if (!acf::evaluate(cfg_.access, eit->second.asg, who, acf::Level::Read)) {
      done(ReadOutcome{ReadStatus::AccessDenied, {}});
      return;
    }
    do_read(pv, std::move(done));
    return;
  }
  resolve_pv(pv, [this, pv, who, done = std::move(done)](bool ok) {
    if (!ok) {
      done(ReadOutcome{ReadStatus::NotFound, {}});
      return;
    }
    if (!acf::evaluate(cfg_.access, res_cache_[pv].asg, who, acf::Level::Read)) {
      done(ReadOutcome{ReadStatus::AccessDenied, {}});
      return;
    }
    do_read(pv, std::move(done));
  });
}

void Gateway::forward_write(const proto::Identity& who, const std::string& pv,
                            const proto::ChannelValue& value,
                            std::function<void(WriteOutcome)> done) {
  if (find_stat(pv) >= 0) {
    done(WriteOutcome::Denied);
    return;
  }
  // Evaluated against the ORIGINAL client identity; denial produces no
  // upstream traffic at all.
  auto check_and_go = [this, pv, value, who, done](const std::string& asg) {
    if (!acf::evaluate(cfg_.access, asg, who, acf::Level::Write)) {
      done(WriteOutcome::Denied);
      return;
    }
    do_write(pv, value, done);
  };
  auto eit = entries_.find(pv);
  if (eit != entries_.end()) {
    check_and_go(eit->second.asg);
    return;
  }
  resolve_pv(pv, [this, pv, done, check_and_go](bool ok) {
    if (!ok) {
      done(WriteOutcome::NotFound);
      return;
    }
    check_and_go(res_cache_[pv].asg);
  });
}

// ---------------------------------------------------------------------------
// Periodic work.

void Gateway::hold_tick() {
  std::vector<std::string> pvs;
  pvs.reserve(entries_.size());
  for (const auto& [pv, e] : entries_) {
    if (e.state == CacheState::Inactive) pvs.push_back(pv);
  }
  for (const auto& pv : pvs) apply(pv, EvTick{});
}

void Gateway::stats_tick() {
  for (auto& [stat, subs] : stat_subs_) {
    if (subs.empty()) continue;
    auto v = stat_value(static_cast<int>(stat));
    for (const auto& sub : subs) post_to(sub, v);
  }
}

void Gateway::heartbeat_tick() {
  const std::uint64_t now = reactor_.now_ns();
  const std::uint64_t hb = cfg_.heartbeat_ms * net::kNsPerMs;
  for (std::size_t u = 0; u < ups_.size(); ++u) {
    Upstream& up = ups_[u];
    if (up.state != Upstream::State::Up) continue;
    const std::uint64_t idle = now - up.last_rx_ns;
    if (idle >= 2 * hb) {
      upstream_lost(u);  // two silent heartbeats: the IOC is gone or hung
    } else if (idle >= hb && !up.echo_outstanding) {
      up.echo_outstanding = true;
      send_up(u, Frame(Command::Echo, 0));
    }
  }
}

void Gateway::poll_tick() {
  for (const auto& [pv, e] : entries_) {
    if (e.subscribers.empty() || e.upstream < 0) continue;
    if (e.state != CacheState::Active && e.state != CacheState::Connecting) continue;
    const auto u = static_cast<std::size_t>(e.upstream);
    const std::string name = pv;
    ensure_upstream(u, [this, name, u](bool up) {
      if (!up) return;
      ensure_channel(u, name, [this, name, u](bool open) {
        if (!open) return;
        auto byname = ups_[u].chan_by_pv.find(name);
        if (byname == ups_[u].chan_by_pv.end()) return;
        send_up(u, Frame(Command::Read, byname->second));
      });
    });
  }
}

}  // namespace pvgate::gw
