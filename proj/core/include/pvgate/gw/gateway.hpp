#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pvgate/acf/acf.hpp"
#include "pvgate/gw/cache_entry.hpp"
#include "pvgate/net/reactor.hpp"
#include "pvgate/proto/frame.hpp"
#include "pvgate/proto/messages.hpp"
#include "pvgate/util/rate.hpp"

namespace pvgate::gw {

struct GatewayConfig {
  net::Endpoint listen;
  std::vector<net::Endpoint> upstreams;  // probed in order, first SEARCH_OK wins
  acf::Config access;                    // merged security file
  std::uint64_t hold_seconds = 7200;     // keep unsubscribed entries this long
  std::string stats_prefix = "gw:";
  std::uint32_t stats_window_s = 10;
  proto::Identity identity{"gateway", "gateway"};  // presented upstream
  std::uint32_t poll_ms = 0;             // 0 = monitor mode (EVENT_ADD upstream)
  std::uint64_t negative_cache_s = 30;
  std::uint64_t resolve_timeout_ms = 2000;
  std::uint64_t resolve_retry_ms = 2000;
  std::uint64_t heartbeat_ms = 5000;     // upstream idle probe; dead at 2 missed
  std::uint64_t timestamp_epoch_ns = 0;
};

struct GatewayStats {
  std::uint64_t alive_pvs = 0;   // ACTIVE + INACTIVE entries
  std::uint64_t active_pvs = 0;
  std::uint64_t client_count = 0;
  std::uint64_t server_count = 0;  // upstream connections currently open
  std::uint64_t fd_count = 4;      // 4 + clients + servers
  double event_rate = 0.0;       // EVENTs/sec received upstream
  double post_rate = 0.0;        // EVENTs/sec delivered downstream
  double existtest_rate = 0.0;   // SEARCHes/sec answered
};

enum class WriteOutcome { Ok, Denied, NotFound, UpstreamDown };
enum class ReadStatus { Ok, AccessDenied, NotFound, UpstreamDown };

struct ReadOutcome {
  ReadStatus status = ReadStatus::NotFound;
  proto::ChannelValue value;
};

// Client to the IOCs, server to everyone else. Maintains at most one
// upstream connection per IOC and one upstream subscription per PV,
// answers reads from the cache, holds idle entries for hold_seconds,
// substitutes its own identity upstream, and serves its statistics as
// local PVs under stats_prefix.
class Gateway : private net::ConnectionHandler {
 public:
  Gateway(net::Reactor& reactor, GatewayConfig cfg);
  ~Gateway() override;

  bool start();  // false when the listen endpoint cannot be bound
  void stop();
  void kill_silently();  // failure injection: vanish without closing

  GatewayStats stats() const;
  const net::Endpoint& bound() const { return bound_; }
  bool running() const { return running_; }
  const acf::Config& access() const { return cfg_.access; }
  const GatewayConfig& config() const { return cfg_; }

  // Cache introspection for tests and operators.
  std::optional<CacheState> entry_state(const std::string& pv) const;
  std::optional<std::uint64_t> entry_hold_deadline_ns(const std::string& pv) const;
  std::size_t entry_count() const { return entries_.size(); }

  // In-process operation surface (same paths the wire handlers use).
  void serve_read(const std::string& pv, const proto::Identity& who,
                  std::function<void(ReadOutcome)> done);
  void forward_write(const proto::Identity& who, const std::string& pv,
                     const proto::ChannelValue& value,
                     std::function<void(WriteOutcome)> done);

  static const std::vector<std::string>& stat_suffixes();

 private:
  struct DownChannel {
    std::string pv;
    proto::Identity who;
    std::string asg;
    bool writable = false;
    bool subscribed = false;
    int stat = -1;  // >= 0 for local stats PVs
  };
  struct Down {
    net::ConnectionPtr conn;
    proto::FrameReader reader;
    std::map<std::uint32_t, DownChannel> channels;
  };

  struct UpChannel {
    std::string pv;
    bool open = false;        // CHAN_OK seen
    bool event_added = false; // upstream subscription live
    std::deque<std::function<void(std::optional<proto::ChannelValue>)>> pending_reads;
    std::deque<std::function<void(std::optional<bool>)>> pending_writes;
    std::vector<std::function<void(bool)>> open_waiters;
  };
  struct Upstream {
    enum class State { Down, Connecting, Up };
    State state = State::Down;
    net::ConnectionPtr conn;
    proto::FrameReader reader;
    std::uint32_t next_cid = 1;
    std::map<std::uint32_t, UpChannel> channels;
    std::map<std::string, std::uint32_t> chan_by_pv;
    std::map<std::uint32_t, std::string> pending_search;  // search cid -> pv
    std::vector<std::function<void(bool)>> connect_waiters;
    std::uint64_t last_rx_ns = 0;
    bool echo_outstanding = false;
  };

  struct ResolveJob {
    std::size_t next = 0;  // upstream index to probe
    std::vector<std::size_t> probed_failed;
    net::TimerId timeout = 0;
    std::vector<std::function<void(bool)>> waiters;
  };
  struct Resolved {
    int upstream = -1;
    std::string asg;
  };

  // ConnectionHandler (downstream and upstream share it; routed by id).
  void on_data(net::Connection& c, std::span<const std::uint8_t> data) override;
  void on_closed(net::Connection& c) override;

  void on_accept(net::ConnectionPtr conn);
  void down_frames(std::uint64_t conn_id);
  void down_dispatch(Down& d, const proto::Frame& f);
  void drop_down(std::uint64_t conn_id);
  void send_down(Down& d, const proto::Frame& f);

  int find_stat(const std::string& pv) const;
  proto::ChannelValue stat_value(int stat) const;

  // Resolution.
  void resolve_pv(const std::string& pv, std::function<void(bool)> done);
  void probe_next(const std::string& pv);
  void finish_resolve(const std::string& pv, bool ok);
  void sweep_idle_upstreams();

  // Upstream plumbing.
  void ensure_upstream(std::size_t u, std::function<void(bool)> done);
  void upstream_connected(std::size_t u, net::ConnectionPtr conn);
  void upstream_lost(std::size_t u);
  void up_frames(std::size_t u);
  void up_dispatch(std::size_t u, const proto::Frame& f);
  void ensure_channel(std::size_t u, const std::string& pv,
                      std::function<void(bool)> done);
  void ensure_subscribed(const std::string& pv);
  void send_up(std::size_t u, const proto::Frame& f);
  int upstream_index(std::uint64_t conn_id) const;

  // Cache.
  CacheEntry& ensure_entry(const std::string& pv, int upstream, const std::string& asg);
  void apply(const std::string& pv, const CacheEvent& ev);
  void run_actions(const std::string& pv, const std::vector<CacheAction>& actions);
  void post_to(const SubscriberKey& sub, const proto::ChannelValue& v);
  void evict(const std::string& pv);
  void schedule_reresolve(const std::string& pv);

  // Internal ops shared by wire handlers and the public op surface.
  void do_read(const std::string& pv, std::function<void(ReadOutcome)> done);
  void do_write(const std::string& pv, const proto::ChannelValue& value,
                std::function<void(WriteOutcome)> done);

  void hold_tick();
  void stats_tick();
  void heartbeat_tick();
  void poll_tick();

  net::Reactor& reactor_;
  GatewayConfig cfg_;
  net::Endpoint bound_;
  bool running_ = false;

  std::map<std::uint64_t, Down> downs_;
  std::vector<Upstream> ups_;
  std::map<std::uint64_t, std::size_t> up_by_conn_;

  std::map<std::string, CacheEntry> entries_;
  std::map<std::string, Resolved> res_cache_;
  std::map<std::string, std::uint64_t> neg_cache_;  // pv -> expiry ns
  std::map<std::string, ResolveJob> jobs_;
  std::map<std::string, net::TimerId> reresolve_timers_;

  net::TimerId hold_timer_ = 0;
  net::TimerId stats_timer_ = 0;
  net::TimerId hb_timer_ = 0;
  net::TimerId poll_timer_ = 0;
  std::map<std::uint32_t, std::set<SubscriberKey>> stat_subs_;  // stat id -> subs

  util::RateCounter event_rate_;
  util::RateCounter post_rate_;
  util::RateCounter existtest_rate_;
};

// Reads, parses and merges the named ACF files (a single file is the
// identity merge). Used by the pvgate tool and the harness.
acf::Config load_merged_acf(const std::vector<std::string>& paths, acf::MergeMode mode);

}  // namespace pvgate::gw
