#pragma once

// Event-driven transport abstraction. Two backends exist: SimReactor, a
// single-threaded discrete-event network with a virtual clock (fully
// deterministic, used by tests and the harness), and RealReactor, a
// poll(2)-based loop over TCP sockets (used by the command line tools).
// Engines are written against this interface and do not know which clock
// is driving them.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>

#include "pvgate/net/endpoint.hpp"

namespace pvgate::net {

inline constexpr std::uint64_t kNsPerMs = 1'000'000ull;
inline constexpr std::uint64_t kNsPerSec = 1'000'000'000ull;

using TimerId = std::uint64_t;

class Connection;
using ConnectionPtr = std::shared_ptr<Connection>;

struct ConnectionHandler {
  virtual ~ConnectionHandler() = default;
  virtual void on_data(Connection& c, std::span<const std::uint8_t> data) = 0;
  virtual void on_closed(Connection& c) = 0;
};

class Connection {
 public:
  virtual ~Connection() = default;

  virtual void send(std::span<const std::uint8_t> data) = 0;
  // Orderly close: the peer observes on_closed.
  virtual void close() = 0;
  // Failure injection: drop without notifying the peer. Real sockets
  // cannot fake a vanished process, so the default is a plain close.
  virtual void sever() { close(); }
  virtual bool is_open() const = 0;
  virtual Endpoint peer() const = 0;
  // Stable per-reactor id; assigned in creation order, so deterministic
  // under the simulator.
  virtual std::uint64_t id() const = 0;

  void set_handler(ConnectionHandler* h) { handler_ = h; }
  ConnectionHandler* handler() const { return handler_; }

 protected:
  ConnectionHandler* handler_ = nullptr;
};

using AcceptFn = std::function<void(ConnectionPtr)>;
// Invoked with nullptr when the connect attempt fails.
using ConnectFn = std::function<void(ConnectionPtr)>;

class Reactor {
 public:
  virtual ~Reactor() = default;

  virtual std::uint64_t now_ns() const = 0;
  virtual TimerId schedule(std::uint64_t delay_ns, std::function<void()> fn) = 0;
  virtual void cancel(TimerId id) = 0;

  // Returns the bound endpoint (real sockets resolve port 0) or nullopt.
  virtual std::optional<Endpoint> listen(const Endpoint& ep, AcceptFn on_accept) = 0;
  virtual void unlisten(const Endpoint& ep) = 0;
  virtual void connect(const Endpoint& ep, ConnectFn on_connect) = 0;

  virtual void run_for(std::uint64_t duration_ns) = 0;
  virtual void stop() = 0;
};

}  // namespace pvgate::net
