#include "pvgate/net/sim_reactor.hpp"

namespace pvgate::net {

SimReactor::SimReactor(std::uint64_t latency_ns) : latency_(latency_ns) {}

SimReactor::~SimReactor() = default;

void SimReactor::post(std::uint64_t delay_ns, std::function<void()> fn, TimerId timer_id) {
  queue_.emplace(std::make_pair(now_ + delay_ns, ++seq_), EventBody{std::move(fn), timer_id});
}

TimerId SimReactor::schedule(std::uint64_t delay_ns, std::function<void()> fn) {
  TimerId id = next_timer_++;
  post(delay_ns, std::move(fn), id);
  return id;
}

void SimReactor::cancel(TimerId id) {
  if (id != 0) dead_timers_.insert(id);
}

std::optional<Endpoint> SimReactor::listen(const Endpoint& ep, AcceptFn on_accept) {
  auto [it, inserted] = listeners_.emplace(ep.str(), std::move(on_accept));
  if (!inserted) return std::nullopt;
  return ep;
}

void SimReactor::unlisten(const Endpoint& ep) { listeners_.erase(ep.str()); }

void SimReactor::connect(const Endpoint& ep, ConnectFn on_connect) {
  post(latency_, [this, ep, on_connect = std::move(on_connect)]() {
    auto it = listeners_.find(ep.str());
    if (it == listeners_.end()) {
      on_connect(nullptr);
      return;
    }
    auto client = std::make_shared<SimConnection>();
    auto server = std::make_shared<SimConnection>();
    client->reactor_ = server->reactor_ = this;
    client->id_ = next_conn_++;
    server->id_ = next_conn_++;
    client->peer_ = server;
    server->peer_ = client;
    client->remote_ = ep;
    server->remote_ = Endpoint{"peer" + std::to_string(client->id_), 0};
    client->server_ep_ = server->server_ep_ = ep;
    client->to_server_ = true;
    // Accept runs before the connector's callback so a refusal (server
    // closing in accept) is already in flight when the client proceeds.
    it->second(server);
    on_connect(client);
  });
}

void SimReactor::deliver_tap(const SimConnection& target, std::span<const std::uint8_t> bytes) {
  auto it = taps_.find(target.server_ep_.str());
  if (it == taps_.end()) return;
  // Direction is relative to the receiving side.
  it->second(target.id(), target.server_ep_, !target.to_server_, bytes);
}

void SimReactor::set_tap(const Endpoint& server, TapFn fn) {
  taps_[server.str()] = std::move(fn);
}

void SimReactor::clear_tap(const Endpoint& server) { taps_.erase(server.str()); }

void SimReactor::run_for(std::uint64_t duration_ns) {
  stopped_ = false;
  const std::uint64_t end = now_ + duration_ns;
  while (!stopped_ && !queue_.empty() && queue_.begin()->first.first <= end) {
    auto node = queue_.extract(queue_.begin());
    now_ = std::max(now_, node.key().first);
    EventBody& ev = node.mapped();
    if (ev.timer_id != 0 && dead_timers_.erase(ev.timer_id) > 0) continue;
    ev.fn();
  }
  if (!stopped_) now_ = end;
}

bool SimReactor::run_until(const std::function<bool()>& pred, std::uint64_t max_ns) {
  if (pred()) return true;
  stopped_ = false;
  const std::uint64_t end = now_ + max_ns;
  while (!stopped_ && !queue_.empty() && queue_.begin()->first.first <= end) {
    auto node = queue_.extract(queue_.begin());
    now_ = std::max(now_, node.key().first);
    EventBody& ev = node.mapped();
    if (ev.timer_id != 0 && dead_timers_.erase(ev.timer_id) > 0) continue;
    ev.fn();
    if (pred()) return true;
  }
  return pred();
}

void SimConnection::send(std::span<const std::uint8_t> data) {
  if (!open_ || !reactor_) return;
  auto target = peer_;
  std::vector<std::uint8_t> chunk(data.begin(), data.end());
  reactor_->post(reactor_->latency_, [r = reactor_, target, chunk = std::move(chunk)]() {
    auto t = target.lock();
    if (!t || !t->open_) return;  // receiver gone or frozen
    r->deliver_tap(*t, chunk);
    if (t->handler()) t->handler()->on_data(*t, chunk);
  });
}

void SimConnection::shutdown(bool notify_peer) {
  if (!open_) return;
  open_ = false;
  if (!notify_peer || !reactor_) return;
  auto target = peer_;
  reactor_->post(reactor_->latency_, [target]() {
    auto t = target.lock();
    if (!t || !t->open_) return;
    t->open_ = false;
    if (t->handler()) t->handler()->on_closed(*t);
  });
}

void SimConnection::close() { shutdown(true); }

void SimConnection::sever() { shutdown(false); }

SimConnection::~SimConnection() {
  // Dropping the last reference without close() behaves like close.
  shutdown(true);
}

}  // namespace pvgate::net
