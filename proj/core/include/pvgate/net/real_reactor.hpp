#pragma once

// poll(2)-based reactor over nonblocking TCP sockets. Single-threaded;
// the wall-clock counterpart of SimReactor used by the command line
// tools. now_ns() is monotonic time since construction so engine-side
// arithmetic (generator phases, windows) starts near zero, as it does
// under the simulator.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "pvgate/net/reactor.hpp"

namespace pvgate::net {

class RealConnection;

class RealReactor : public Reactor {
 public:
  RealReactor();
  ~RealReactor() override;

  std::uint64_t now_ns() const override;
  TimerId schedule(std::uint64_t delay_ns, std::function<void()> fn) override;
  void cancel(TimerId id) override;
  std::optional<Endpoint> listen(const Endpoint& ep, AcceptFn on_accept) override;
  void unlisten(const Endpoint& ep) override;
  void connect(const Endpoint& ep, ConnectFn on_connect) override;
  void run_for(std::uint64_t duration_ns) override;
  void stop() { stopped_ = true; }

  // Runs until stop() is called.
  void run();
  bool run_until(const std::function<bool()>& pred, std::uint64_t max_ns);

 private:
  friend class RealConnection;

  struct Listener {
    int fd = -1;
    AcceptFn on_accept;
    Endpoint bound;
  };
  struct Pending {
    int fd = -1;
    ConnectFn on_connect;
    Endpoint target;
  };
  struct EventBody {
    std::function<void()> fn;
    TimerId timer_id = 0;
  };

  void step(std::uint64_t max_wait_ns);
  void fire_due_timers();
  void defer_close(int fd);
  void flush_deferred();
  std::uint64_t next_timer_due() const;

  std::uint64_t start_ns_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t next_timer_ = 1;
  std::uint64_t next_conn_ = 1;
  bool stopped_ = false;
  std::map<std::pair<std::uint64_t, std::uint64_t>, EventBody> timers_;
  std::set<TimerId> dead_timers_;
  std::map<std::string, Listener> listeners_;
  std::map<int, Pending> pending_;
  std::map<int, std::shared_ptr<RealConnection>> conns_;
  std::vector<int> deferred_close_;
};

class RealConnection : public Connection,
                       public std::enable_shared_from_this<RealConnection> {
 public:
  void send(std::span<const std::uint8_t> data) override;
  void close() override;
  bool is_open() const override { return open_; }
  Endpoint peer() const override { return remote_; }
  std::uint64_t id() const override { return id_; }

  ~RealConnection() override;

 private:
  friend class RealReactor;

  bool flush();  // false on fatal error

  RealReactor* reactor_ = nullptr;
  int fd_ = -1;
  std::uint64_t id_ = 0;
  Endpoint remote_;
  bool open_ = true;
  std::deque<std::uint8_t> outbuf_;
};

}  // namespace pvgate::net
