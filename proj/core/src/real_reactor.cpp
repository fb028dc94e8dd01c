#include "pvgate/net/real_reactor.hpp"

#include <arpa/inet.h>
#include <errno.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <string.h>
#include <sys/socket.h>
#include <time.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>

namespace pvgate::net {

namespace {

std::uint64_t monotonic_ns() {
  timespec ts{};
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<std::uint64_t>(ts.tv_sec) * kNsPerSec +
         static_cast<std::uint64_t>(ts.tv_nsec);
}

bool set_nonblocking(int fd) {
  int flags = fcntl(fd, F_GETFL, 0);
  return flags >= 0 && fcntl(fd, F_SETFL, flags | O_NONBLOCK) == 0;
}

bool resolve(const Endpoint& ep, sockaddr_in& out) {
  out = {};
  out.sin_family = AF_INET;
  out.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &out.sin_addr) == 1) return true;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    return false;
  }
  out.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return true;
}

}  // namespace

RealReactor::RealReactor() : start_ns_(monotonic_ns()) {}

RealReactor::~RealReactor() {
  for (auto& [name, l] : listeners_) {
    if (l.fd >= 0) ::close(l.fd);
  }
  for (auto& [fd, p] : pending_) ::close(fd);
  for (auto& [fd, c] : conns_) {
    c->open_ = false;
    ::close(fd);
    c->fd_ = -1;
  }
}

std::uint64_t RealReactor::now_ns() const { return monotonic_ns() - start_ns_; }

TimerId RealReactor::schedule(std::uint64_t delay_ns, std::function<void()> fn) {
  TimerId id = next_timer_++;
  timers_.emplace(std::make_pair(now_ns() + delay_ns, ++seq_), EventBody{std::move(fn), id});
  return id;
}

void RealReactor::cancel(TimerId id) {
  if (id != 0) dead_timers_.insert(id);
}

std::optional<Endpoint> RealReactor::listen(const Endpoint& ep, AcceptFn on_accept) {
  sockaddr_in addr{};
  if (!resolve(ep, addr)) return std::nullopt;
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return std::nullopt;
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd, 128) != 0 || !set_nonblocking(fd)) {
    ::close(fd);
    return std::nullopt;
  }
  sockaddr_in bound{};
  socklen_t blen = sizeof(bound);
  getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &blen);
  Endpoint be{ep.host, ntohs(bound.sin_port)};
  listeners_[be.str()] = Listener{fd, std::move(on_accept), be};
  return be;
}

void RealReactor::unlisten(const Endpoint& ep) {
  auto it = listeners_.find(ep.str());
  if (it == listeners_.end()) return;
  ::close(it->second.fd);
  listeners_.erase(it);
}

void RealReactor::connect(const Endpoint& ep, ConnectFn on_connect) {
  sockaddr_in addr{};
  if (!resolve(ep, addr)) {
    schedule(0, [on_connect] { on_connect(nullptr); });
    return;
  }
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0 || !set_nonblocking(fd)) {
    if (fd >= 0) ::close(fd);
    schedule(0, [on_connect] { on_connect(nullptr); });
    return;
  }
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  if (rc != 0 && errno != EINPROGRESS) {
    ::close(fd);
    schedule(0, [on_connect] { on_connect(nullptr); });
    return;
  }
  pending_[fd] = Pending{fd, std::move(on_connect), ep};
}

void RealReactor::defer_close(int fd) { deferred_close_.push_back(fd); }

void RealReactor::flush_deferred() {
  for (int fd : deferred_close_) {
    auto it = conns_.find(fd);
    if (it != conns_.end()) {
      it->second->fd_ = -1;
      conns_.erase(it);
    }
    ::close(fd);
  }
  deferred_close_.clear();
}

std::uint64_t RealReactor::next_timer_due() const {
  if (timers_.empty()) return ~0ull;
  return timers_.begin()->first.first;
}

void RealReactor::fire_due_timers() {
  const std::uint64_t now = now_ns();
  while (!timers_.empty() && timers_.begin()->first.first <= now) {
    auto node = timers_.extract(timers_.begin());
    EventBody& ev = node.mapped();
    if (ev.timer_id != 0 && dead_timers_.erase(ev.timer_id) > 0) continue;
    ev.fn();
  }
}

void RealReactor::step(std::uint64_t max_wait_ns) {
  fire_due_timers();
  flush_deferred();

  std::uint64_t wait = max_wait_ns;
  const std::uint64_t due = next_timer_due();
  if (due != ~0ull) {
    const std::uint64_t now = now_ns();
    wait = due > now ? std::min(wait, due - now) : 0;
  }

  std::vector<pollfd> pfds;
  std::vector<int> kinds;  // 0 listener, 1 pending, 2 conn
  std::vector<std::string> lnames;
  for (auto& [name, l] : listeners_) {
    pfds.push_back({l.fd, POLLIN, 0});
    kinds.push_back(0);
    lnames.push_back(name);
  }
  for (auto& [fd, p] : pending_) {
    pfds.push_back({fd, POLLOUT, 0});
    kinds.push_back(1);
    lnames.emplace_back();
  }
  for (auto& [fd, c] : conns_) {
    short ev = POLLIN;
    if (!c->outbuf_.empty()) ev |= POLLOUT;
    pfds.push_back({fd, ev, 0});
    kinds.push_back(2);
    lnames.emplace_back();
  }

  int timeout_ms = static_cast<int>(std::min<std::uint64_t>(wait / kNsPerMs, 1000));
  if (pfds.empty()) {
    if (timeout_ms > 0) {
      timespec ts{timeout_ms / 1000, (timeout_ms % 1000) * 1000000};
      nanosleep(&ts, nullptr);
    }
    fire_due_timers();
    return;
  }

  int n = ::poll(pfds.data(), pfds.size(), timeout_ms);
  fire_due_timers();
  if (n <= 0) {
    flush_deferred();
    return;
  }

  for (std::size_t i = 0; i < pfds.size(); ++i) {
    if (pfds[i].revents == 0) continue;
    if (kinds[i] == 0) {
      auto it = listeners_.find(lnames[i]);
      if (it == listeners_.end()) continue;
      for (;;) {
        sockaddr_in peer{};
        socklen_t plen = sizeof(peer);
        int cfd = ::accept(it->second.fd, reinterpret_cast<sockaddr*>(&peer), &plen);
        if (cfd < 0) break;
        set_nonblocking(cfd);
        int one = 1;
        setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        auto conn = std::make_shared<RealConnection>();
        conn->reactor_ = this;
        conn->fd_ = cfd;
        conn->id_ = next_conn_++;
        char ip[64];
        inet_ntop(AF_INET, &peer.sin_addr, ip, sizeof(ip));
        conn->remote_ = Endpoint{ip, ntohs(peer.sin_port)};
        conns_[cfd] = conn;
        it->second.on_accept(conn);
      }
    } else if (kinds[i] == 1) {
      int fd = pfds[i].fd;
      auto it = pending_.find(fd);
      if (it == pending_.end()) continue;
      Pending p = std::move(it->second);
      pending_.erase(it);
      int err = 0;
      socklen_t elen = sizeof(err);
      getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &elen);
      if (err != 0 || (pfds[i].revents & (POLLERR | POLLHUP))) {
        ::close(fd);
        p.on_connect(nullptr);
        continue;
      }
      int one = 1;
      setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      auto conn = std::make_shared<RealConnection>();
      conn->reactor_ = this;
      conn->fd_ = fd;
      conn->id_ = next_conn_++;
      conn->remote_ = p.target;
      conns_[fd] = conn;
      p.on_connect(conn);
    } else {
      int fd = pfds[i].fd;
      auto it = conns_.find(fd);
      if (it == conns_.end()) continue;
      auto conn = it->second;
      if (pfds[i].revents & POLLOUT) {
        if (!conn->flush()) {
          conn->open_ = false;
          if (conn->handler()) conn->handler()->on_closed(*conn);
          defer_close(fd);
          continue;
        }
      }
      if (pfds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
        std::uint8_t buf[65536];
        bool dead = false;
        for (;;) {
          ssize_t got = ::read(fd, buf, sizeof(buf));
          if (got > 0) {
            if (conn->handler()) {
              conn->handler()->on_data(*conn, std::span<const std::uint8_t>(buf, got));
            }
            if (!conn->open_) break;  // handler closed it
            continue;
          }
          if (got < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) break;
          if (got < 0 && errno == EINTR) continue;
          dead = true;
          break;
        }
        if (dead && conn->open_) {
          conn->open_ = false;
          if (conn->handler()) conn->handler()->on_closed(*conn);
          defer_close(fd);
        }
      }
    }
  }
  flush_deferred();
}

void RealReactor::run_for(std::uint64_t duration_ns) {
  stopped_ = false;
  const std::uint64_t end = now_ns() + duration_ns;
  while (!stopped_) {
    const std::uint64_t now = now_ns();
    if (now >= end) break;
    step(end - now);
  }
}

void RealReactor::run() {
  stopped_ = false;
  while (!stopped_) step(kNsPerSec);
}

bool RealReactor::run_until(const std::function<bool()>& pred, std::uint64_t max_ns) {
  stopped_ = false;
  const std::uint64_t end = now_ns() + max_ns;
  while (!stopped_ && !pred()) {
    const std::uint64_t now = now_ns();
    if (now >= end) break;
    step(std::min<std::uint64_t>(end - now, 50 * kNsPerMs));
  }
  return pred();
}

void RealConnection::send(std::span<const std::uint8_t> data) {
  if (!open_ || fd_ < 0) return;
  outbuf_.insert(outbuf_.end(), data.begin(), data.end());
  if (!flush()) {
    open_ = false;
    // Deliver the close from the loop, never from inside the caller:
    // engines may be mid-iteration over the very state on_closed drops.
    auto self = shared_from_this();
    reactor_->schedule(0, [self]() {
      if (self->handler()) self->handler()->on_closed(*self);
    });
    reactor_->defer_close(fd_);
  }
}

bool RealConnection::flush() {
  while (!outbuf_.empty() && fd_ >= 0) {
    std::uint8_t buf[65536];
    const std::size_t n = std::min(outbuf_.size(), sizeof(buf));
    std::copy_n(outbuf_.begin(), n, buf);
    ssize_t sent = ::send(fd_, buf, n, MSG_NOSIGNAL);
    if (sent > 0) {
      outbuf_.erase(outbuf_.begin(), outbuf_.begin() + sent);
      continue;
    }
    if (sent < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return true;
    if (sent < 0 && errno == EINTR) continue;
    return false;
  }
  return true;
}

void RealConnection::close() {
  if (!open_) return;
  open_ = false;
  if (reactor_ && fd_ >= 0) reactor_->defer_close(fd_);
}

RealConnection::~RealConnection() {
  if (open_ && reactor_ && fd_ >= 0) reactor_->defer_close(fd_);
}

}  // namespace pvgate::net
