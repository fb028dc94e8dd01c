#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pvgate/net/reactor.hpp"
#include "pvgate/proto/frame.hpp"
#include "pvgate/proto/messages.hpp"

namespace pvgate::client {

// Ordered endpoint preference list. Resolution probes all endpoints and
// prefers the earliest positive responder, independent of reply timing;
// strict_duplicates instead reports DUPLICATE_PV when more than one
// endpoint serves the name (the dual-homed ambiguity made loud).
struct AddressList {
  std::vector<net::Endpoint> endpoints;
  bool strict_duplicates = false;
};

enum class ClientStatus : std::uint8_t {
  Ok,
  NotFound,
  DuplicatePv,
  AccessDenied,
  WriteDenied,
  ConnLost,
  Timeout,
};

const char* to_string(ClientStatus s);

struct ResolveResult {
  ClientStatus status = ClientStatus::NotFound;
  net::Endpoint endpoint;
};

struct GetResult {
  ClientStatus status = ClientStatus::NotFound;
  proto::ChannelValue value;
};

struct PutResult {
  ClientStatus status = ClientStatus::NotFound;
};

// One client context: a pooled connection per endpoint, name resolution
// over the address list, and get/put/monitor on top. Connections run a
// 5 s idle heartbeat and declare the peer dead after two silent beats,
// at which point every monitor on that connection delivers one final
// severity-INVALID value and ends.
class ClientSession : private net::ConnectionHandler {
 public:
  ClientSession(net::Reactor& reactor, AddressList list, proto::Identity identity);
  ~ClientSession() override;

  void resolve(const std::string& pv, std::function<void(ResolveResult)> done);
  void get(const std::string& pv, std::function<void(GetResult)> done);
  void put(const std::string& pv, const proto::ChannelValue& value,
           std::function<void(PutResult)> done);

  using MonitorSink = std::function<void(const proto::ChannelValue&)>;
  using MonitorDone = std::function<void(ClientStatus)>;
  std::uint64_t monitor(const std::string& pv, MonitorSink sink, MonitorDone done = {});
  void cancel_monitor(std::uint64_t id);

  void close();

  const proto::Identity& identity() const { return identity_; }

  std::uint64_t op_timeout_ms = 5000;
  std::uint64_t resolve_timeout_ms = 2000;
  std::uint64_t heartbeat_ms = 5000;

 private:
  struct Chan {
    std::string pv;
    bool open = false;
    bool writable = false;
    std::uint64_t monitor = 0;  // owning monitor id, 0 for one-shot ops
    std::vector<std::function<void(bool)>> open_waiters;
    std::deque<std::function<void(std::optional<proto::ChannelValue>)>> pending_reads;
    std::deque<std::function<void(std::optional<bool>)>> pending_writes;
  };
  struct Peer {
    enum class State { Down, Connecting, Up };
    State state = State::Down;
    net::ConnectionPtr conn;
    proto::FrameReader reader;
    std::uint32_t next_cid = 1;
    std::map<std::uint32_t, Chan> chans;
    std::map<std::uint32_t, std::string> pending_search;  // cid -> pv
    std::vector<std::function<void(bool)>> connect_waiters;
    net::TimerId echo_timer = 0;
    net::TimerId dead_timer = 0;
  };
  struct Monitor {
    std::string pv;
    std::size_t peer = 0;
    std::uint32_t cid = 0;
    MonitorSink sink;
    MonitorDone done;
    std::optional<proto::ChannelValue> last;
    bool live = false;
  };
  struct Probe {
    std::vector<int> verdict;  // -1 pending, 0 fail, 1 ok per endpoint
    std::vector<std::function<void(ResolveResult)>> waiters;
    net::TimerId timeout = 0;
  };

  void on_data(net::Connection& c, std::span<const std::uint8_t> data) override;
  void on_closed(net::Connection& c) override;

  void ensure_peer(std::size_t k, std::function<void(bool)> done);
  void peer_frames(std::size_t k);
  void dispatch(std::size_t k, const proto::Frame& f);
  void peer_lost(std::size_t k);
  void send_peer(std::size_t k, const proto::Frame& f);
  void arm_heartbeat(std::size_t k);
  int peer_index(std::uint64_t conn_id) const;

  void probe_done(const std::string& pv, std::size_t k, bool ok);
  void finish_probe(const std::string& pv);

  void open_channel(std::size_t k, const std::string& pv,
                    std::function<void(std::optional<std::uint32_t>)> done);
  void clear_channel(std::size_t k, std::uint32_t cid);

  net::Reactor& reactor_;
  AddressList list_;
  proto::Identity identity_;
  std::vector<Peer> peers_;
  std::map<std::uint64_t, std::size_t> peer_by_conn_;
  std::map<std::string, Probe> probes_;
  std::map<std::uint64_t, Monitor> monitors_;
  std::uint64_t next_monitor_ = 1;
  bool closed_ = false;
};

}  // namespace pvgate::client
