#pragma once

// Discrete-event network simulator with a virtual clock. Everything is
// single-threaded and ordered by (due time, sequence number), so a given
// component graph plus seed replays bit-identically. Connections are
// in-memory byte streams with a fixed per-hop latency.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "pvgate/net/reactor.hpp"

namespace pvgate::net {

class SimConnection;

class SimReactor : public Reactor {
 public:
  explicit SimReactor(std::uint64_t latency_ns = kNsPerMs);
  ~SimReactor() override;

  std::uint64_t now_ns() const override { return now_; }
  TimerId schedule(std::uint64_t delay_ns, std::function<void()> fn) override;
  void cancel(TimerId id) override;
  std::optional<Endpoint> listen(const Endpoint& ep, AcceptFn on_accept) override;
  void unlisten(const Endpoint& ep) override;
  void connect(const Endpoint& ep, ConnectFn on_connect) override;
  void run_for(std::uint64_t duration_ns) override;
  void stop() override { stopped_ = true; }

  // Runs until pred() holds (checked after each event) or the deadline
  // passes; returns whether pred was satisfied.
  bool run_until(const std::function<bool()>& pred, std::uint64_t max_ns);

  std::uint64_t latency_ns() const { return latency_; }

  // Test instrumentation: observe bytes as they are delivered over
  // connections that were accepted at `server`. to_server is true for
  // client->server chunks.
  using TapFn = std::function<void(std::uint64_t conn_id, const Endpoint& server,
                                   bool to_server, std::span<const std::uint8_t> bytes)>;
  void set_tap(const Endpoint& server, TapFn fn);
  void clear_tap(const Endpoint& server);

 private:
  friend class SimConnection;

  void post(std::uint64_t delay_ns, std::function<void()> fn, TimerId timer_id = 0);
  void deliver_tap(const SimConnection& target, std::span<const std::uint8_t> bytes);

  struct EventBody {
    std::function<void()> fn;
    TimerId timer_id = 0;
  };

  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t latency_;
  std::uint64_t next_timer_ = 1;
  std::uint64_t next_conn_ = 1;
  bool stopped_ = false;
  std::map<std::pair<std::uint64_t, std::uint64_t>, EventBody> queue_;
  std::set<TimerId> dead_timers_;
  std::map<std::string, AcceptFn> listeners_;
  std::map<std::string, TapFn> taps_;
};

class SimConnection : public Connection,
                      public std::enable_shared_from_this<SimConnection> {
 public:
  void send(std::span<const std::uint8_t> data) override;
  void close() override;
  void sever() override;
  bool is_open() const override { return open_; }
  Endpoint peer() const override { return remote_; }
  std::uint64_t id() const override { return id_; }

  ~SimConnection() override;

 private:
  friend class SimReactor;

  void shutdown(bool notify_peer);

  SimReactor* reactor_ = nullptr;
  std::uint64_t id_ = 0;
  std::weak_ptr<SimConnection> peer_;
  Endpoint remote_;      // other side's address
  Endpoint server_ep_;   // listener this pair was accepted at (tap key)
  bool to_server_ = false;
  bool open_ = true;
};

}  // namespace pvgate::net
