#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pvgate/acf/acf.hpp"
#include "pvgate/ioc/database.hpp"
#include "pvgate/net/reactor.hpp"
#include "pvgate/proto/frame.hpp"
#include "pvgate/proto/messages.hpp"
#include "pvgate/util/rate.hpp"

namespace pvgate::ioc {

struct IocConfig {
  std::string name = "ioc";
  net::Endpoint listen;
  double capacity_msgs_per_sec = 1000.0;
  int fd_limit = 150;  // the raised production limit; default was 50
  std::uint32_t stats_window_s = 10;
  std::uint64_t timestamp_epoch_ns = 0;  // added to generator timestamps
};

// Fixed fd model: listener + stdio triple + one per connection. Keeping
// the count synthetic makes fd arithmetic reproducible across hosts.
struct IocStats {
  std::uint64_t connections = 0;
  std::uint64_t fds = 4;
  double event_posts_per_sec = 0.0;
  double msgs_in_per_sec = 0.0;
  double cpu_proxy = 0.0;  // min(1, total msgs/sec / capacity)
  std::uint64_t refused_connections = 0;
  bool degraded = false;
};

// Serves the wire protocol for one PV database: search/create/read/write,
// per-connection event subscriptions (one EVENT per generator tick per
// subscription -- no coalescing), ACF enforcement, and the saturation
// model: connections are refused once the fd budget is spent, and when
// cpu_proxy hits 1.0 the server stops responding until load drops.
class IocServer : private net::ConnectionHandler {
 public:
  IocServer(net::Reactor& reactor, IocConfig cfg, std::vector<PvRecord> db,
            acf::Config acl);
  ~IocServer() override;

  bool start();  // false when the endpoint cannot be bound
  void stop();
  void kill_silently();  // failure injection: vanish without closing

  IocStats stats() const;
  const net::Endpoint& bound() const { return bound_; }
  const std::string& name() const { return cfg_.name; }
  bool running() const { return running_; }

  // Synthetic read-only PVs: <name>:stats:fds, :connections, :cpu_proxy,
  // :event_rate, :msgs_in_rate, :refused.
  static const std::vector<std::string>& stat_suffixes();

 private:
  struct Channel {
    int pv = -1;        // index into db_, or -(1+stat) for a stats PV
    proto::Identity who;
    bool writable = false;
    bool subscribed = false;
  };
  struct ConnState {
    net::ConnectionPtr conn;
    proto::FrameReader reader;
    std::map<std::uint32_t, Channel> channels;
  };
  using SubKey = std::pair<std::uint64_t, std::uint32_t>;  // conn id, cid

  void on_data(net::Connection& c, std::span<const std::uint8_t> data) override;
  void on_closed(net::Connection& c) override;

  void on_accept(net::ConnectionPtr conn);
  void process_frames(std::uint64_t conn_id);
  void dispatch(ConnState& cs, const proto::Frame& f);
  void drop_connection(std::uint64_t conn_id);
  void send(ConnState& cs, const proto::Frame& f);

  int find_pv(const std::string& name) const;           // db index or -1
  int find_stat(const std::string& name) const;         // stat id or -1
  proto::ChannelValue stat_value(int stat) const;
  std::uint64_t now_ms() const;
  std::uint64_t stamp(std::uint64_t t_ms) const;

  void tick_group(std::uint32_t period_ms);
  void stats_tick();
  void post_event(int pv);
  double cpu_proxy_now() const;

  net::Reactor& reactor_;
  IocConfig cfg_;
  std::vector<PvRecord> db_;
  std::map<std::string, int> index_;
  acf::Config acl_;
  net::Endpoint bound_;
  bool running_ = false;
  bool degraded_ = false;

  std::map<std::uint64_t, ConnState> conns_;
  std::vector<std::set<SubKey>> subs_;       // aligned with db_
  std::set<SubKey> stat_subs_[6];
  std::map<std::uint32_t, net::TimerId> tick_timers_;  // one per distinct period
  net::TimerId stats_timer_ = 0;
  std::uint64_t refused_ = 0;

  util::RateCounter msgs_in_;
  util::RateCounter event_posts_;
};

}  // namespace pvgate::ioc
