#include <benchmark/benchmark.h>

#include "pvgate/client/client.hpp"
#include "pvgate/gw/gateway.hpp"
#include "pvgate/ioc/ioc_server.hpp"
#include "pvgate/net/sim_reactor.hpp"

using namespace pvgate;

namespace {

void BM_TimerChurn(benchmark::State& state) {
  for (auto _ : state) {
    net::SimReactor sim;
    int fired = 0;
    for (int i = 0; i < 10000; ++i) {
      sim.schedule(static_cast<std::uint64_t>(i % 100) * net::kNsPerMs,
                   [&fired] { ++fired; });
    }
    sim.run_for(net::kNsPerSec);
    benchmark::DoNotOptimize(fired);
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_TimerChurn);

// One virtual second of a 10-PV, 5-client gateway topology: generator
// ticks, fan-out, rate accounting, everything against the sim clock.
void BM_GatewaySecond(benchmark::State& state) {
  net::SimReactor sim;
  const auto acl = acf::parse_acf("ASG(DEFAULT){ RULE(1,READ) RULE(1,WRITE) }");
  std::string db;
  for (int i = 0; i < 10; ++i) {
    db += "pv ioc0:pv" + std::to_string(i) + " DOUBLE DEFAULT SINE 100 1\n";
  }
  ioc::IocConfig icfg;
  icfg.name = "ioc0";
  icfg.listen = net::Endpoint{"ioc0", 5064};
  icfg.capacity_msgs_per_sec = 1e12;
  ioc::IocServer ioc0(sim, icfg, ioc::load_database(db), acl);
  ioc0.start();
  gw::GatewayConfig gcfg;
  gcfg.listen = net::Endpoint{"gw", 5064};
  gcfg.upstreams = {icfg.listen};
  gcfg.access = acl;
  gw::Gateway gateway(sim, gcfg);
  gateway.start();
  client::AddressList list;
  list.endpoints = {gcfg.listen};
  std::vector<std::unique_ptr<client::ClientSession>> clients;
  std::uint64_t deliveries = 0;
  for (int k = 0; k < 5; ++k) {
    clients.push_back(std::make_unique<client::ClientSession>(
        sim, list, proto::Identity{"u" + std::to_string(k), "h"}));
    for (int i = 0; i < 10; ++i) {
      clients.back()->monitor("ioc0:pv" + std::to_string(i),
                              [&deliveries](const proto::ChannelValue&) { ++deliveries; });
    }
  }
  sim.run_for(2 * net::kNsPerSec);  // settle
  for (auto _ : state) {
    sim.run_for(net::kNsPerSec);
  }
  benchmark::DoNotOptimize(deliveries);
  // 10 PVs x 10 Hz x 5 subscribers = 500 downstream posts per virtual second.
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 500);
}
BENCHMARK(BM_GatewaySecond);

}  // namespace
