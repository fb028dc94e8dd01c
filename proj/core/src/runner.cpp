#include "pvgate/harness/runner.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

#include "pvgate/client/client.hpp"
#include "pvgate/net/real_reactor.hpp"
#include "pvgate/net/sim_reactor.hpp"
#include "pvgate/util/format.hpp"

namespace pvgate::harness {

std::string pv_name(int ioc_index, int pv_index) {
  return "ioc" + std::to_string(ioc_index) + ":pv" + std::to_string(pv_index);
}

std::string generate_db_text(const ScenarioSpec& spec, int ioc_index) {
  std::ostringstream out;
  out << "# generated database for ioc" << ioc_index << "\n";
  static const char* kMix[] = {"SINE", "COUNTER", "CONST", "RANDOM_WALK"};
  for (int j = 0; j < spec.pvs_per_ioc; ++j) {
    std::string gen;
    if (spec.generators == "sine") {
      gen = "SINE";
    } else if (spec.generators == "const") {
      gen = "CONST";
    } else if (spec.generators == "counter") {
      gen = "COUNTER";
    } else if (spec.generators == "walk") {
      gen = "RANDOM_WALK";
    } else {
      gen = kMix[j % 4];
    }
    const char* dtype = gen == "COUNTER" ? "INT32" : "DOUBLE";
    out << "pv " << pv_name(ioc_index, j) << " " << dtype << " DEFAULT " << gen << " "
        << spec.period_ms << " " << util::format_fixed(spec.amplitude, 6) << "\n";
  }
  return out.str();
}

std::string permissive_acf_text() {
  return "ASG(DEFAULT){ RULE(1,READ) RULE(1,WRITE) }\n";
}

namespace {

using pvgate::client::ClientSession;
using pvgate::client::ClientStatus;

std::string delivery_line(const std::string& pv, const proto::ChannelValue& v) {
  return pv + " " + std::to_string(v.timestamp_ns) + " " + v.display() + " " +
         proto::to_string(v.severity);
}

// A scripted monitor client: subscribes to a fixed PV set, logs every
// delivery, and (optionally) resubscribes after a lost connection.
class HarnessClient {
 public:
  HarnessClient(net::Reactor& reactor, client::AddressList list, std::string id,
                bool critical, bool retry, std::vector<std::string> pvs)
      : reactor_(reactor),
        session_(reactor, std::move(list), proto::Identity{"u_" + id, id + ".host"}),
        pvs_(std::move(pvs)),
        retry_(retry) {
    log_.id = std::move(id);
    log_.critical = critical;
  }

  void start() {
    for (const auto& pv : pvs_) subscribe(pv);
  }

  ClientLog take_log() { return std::move(log_); }

 private:
  void subscribe(const std::string& pv) {
    session_.monitor(
        pv,
        [this, pv](const proto::ChannelValue& v) {
          log_.deliveries.push_back(delivery_line(pv, v));
          if (v.severity == proto::Severity::Invalid) {
            if (!log_.saw_invalid) log_.first_invalid_ns = reactor_.now_ns();
            log_.saw_invalid = true;
          } else if (log_.saw_invalid) {
            log_.recovered = true;
          }
        },
        [this, pv](ClientStatus) {
          if (!retry_) return;
          reactor_.schedule(net::kNsPerSec, [this, pv]() { subscribe(pv); });
        });
  }

  net::Reactor& reactor_;
  ClientSession session_;
  std::vector<std::string> pvs_;
  bool retry_;
  ClientLog log_;
};

struct VariantOptions {
  std::string name;
  bool via_gateway = false;
  double kill_at_s = -1.0;
  double restart_at_s = -1.0;
};

VariantReport run_variant(const ScenarioSpec& spec, const VariantOptions& opt) {
  const bool sim_mode = spec.mode == "virtual";
  std::unique_ptr<net::Reactor> owned;
  if (sim_mode) {
    owned = std::make_unique<net::SimReactor>();
  } else {
    owned = std::make_unique<net::RealReactor>();
  }
  net::Reactor& reactor = *owned;

  const acf::Config acl = acf::parse_acf(permissive_acf_text());

  // IOCs.
  std::vector<std::unique_ptr<ioc::IocServer>> iocs;
  std::vector<net::Endpoint> ioc_eps;
  for (int i = 0; i < spec.iocs; ++i) {
    ioc::IocConfig cfg;
    cfg.name = "ioc" + std::to_string(i);
    cfg.listen = sim_mode ? net::Endpoint{cfg.name, 5064} : net::Endpoint{"127.0.0.1", 0};
    cfg.capacity_msgs_per_sec = spec.capacity;
    cfg.fd_limit = spec.fd_limit;
    auto db = ioc::load_database(generate_db_text(spec, i));
    auto server = std::make_unique<ioc::IocServer>(reactor, cfg, std::move(db), acl);
    if (!server->start()) throw ScenarioError("cannot bind IOC " + cfg.name);
    ioc_eps.push_back(server->bound());
    iocs.push_back(std::move(server));
  }

  // Gateway.
  std::unique_ptr<gw::Gateway> gateway;
  net::Endpoint gw_ep;
  auto make_gateway = [&]() {
    gw::GatewayConfig cfg;
    cfg.listen = sim_mode ? net::Endpoint{"gw", 5064} : net::Endpoint{"127.0.0.1", 0};
    if (gateway) cfg.listen = gw_ep;  // restart reuses the address
    cfg.upstreams = ioc_eps;
    cfg.access = acl;
    cfg.hold_seconds = spec.hold_seconds;
    auto g = std::make_unique<gw::Gateway>(reactor, cfg);
    if (!g->start()) throw ScenarioError("cannot bind gateway");
    gw_ep = g->bound();
    return g;
  };
  if (opt.via_gateway) gateway = make_gateway();

  // Clients.
  std::vector<std::unique_ptr<HarnessClient>> clients;
  const bool failure_run = opt.kill_at_s >= 0;
  for (int i = 0; i < spec.iocs; ++i) {
    std::vector<std::string> pvs;
    for (int j = 0; j < spec.pvs_per_ioc; ++j) pvs.push_back(pv_name(i, j));
    for (int k = 0; k < spec.clients_per_ioc; ++k) {
      client::AddressList list;
      list.endpoints = opt.via_gateway ? std::vector<net::Endpoint>{gw_ep}
                                       : std::vector<net::Endpoint>{ioc_eps[i]};
      clients.push_back(std::make_unique<HarnessClient>(
          reactor, std::move(list), "pub" + std::to_string(i) + "_" + std::to_string(k),
          false, failure_run, pvs));
    }
  }
  {
    std::vector<std::string> all_pvs;
    for (int i = 0; i < spec.iocs; ++i) {
      for (int j = 0; j < spec.pvs_per_ioc; ++j) all_pvs.push_back(pv_name(i, j));
    }
    for (int c = 0; c < spec.critical_clients; ++c) {
      // Direct-first: every IOC before the gateway in the address list,
      // so data-taking never depends on the gateway being alive.
      client::AddressList list;
      list.endpoints = ioc_eps;
      if (opt.via_gateway) list.endpoints.push_back(gw_ep);
      clients.push_back(std::make_unique<HarnessClient>(
          reactor, std::move(list), "crit" + std::to_string(c), true, false, all_pvs));
    }
  }
  for (auto& c : clients) c->start();

  // Failure injection.
  if (failure_run && gateway) {
    reactor.schedule(static_cast<std::uint64_t>(opt.kill_at_s * net::kNsPerSec),
                     [&]() { gateway->kill_silently(); });
    if (opt.restart_at_s >= 0) {
      reactor.schedule(static_cast<std::uint64_t>(opt.restart_at_s * net::kNsPerSec),
                       [&]() { gateway = make_gateway(); });
    }
  }

  // Sampling, one row per second including t=0 and t=duration.
  VariantReport report;
  report.name = opt.name;
  auto sample = [&](double t) {
    StatsSample s;
    s.t = t;
    if (gateway && gateway->running()) {
      s.gateway_up = true;
      s.gw = gateway->stats();
    }
    for (auto& i : iocs) s.iocs.push_back(i->stats());
    report.samples.push_back(std::move(s));
  };
  sample(0.0);
  const int seconds = static_cast<int>(spec.duration_s);
  for (int t = 1; t <= seconds; ++t) {
    reactor.schedule(static_cast<std::uint64_t>(t) * net::kNsPerSec,
                     [&sample, t]() { sample(static_cast<double>(t)); });
  }

  reactor.run_for(static_cast<std::uint64_t>(spec.duration_s * net::kNsPerSec));

  // Final sample summaries.
  if (!report.samples.empty()) {
    const StatsSample& last = report.samples.back();
    double cpu = 0, fds = 0, conns = 0;
    for (const auto& i : last.iocs) {
      cpu += i.cpu_proxy;
      fds += static_cast<double>(i.fds);
      conns += static_cast<double>(i.connections);
    }
    const double n = last.iocs.empty() ? 1.0 : static_cast<double>(last.iocs.size());
    report.mean_ioc_cpu = cpu / n;
    report.mean_ioc_fds = fds / n;
    report.mean_ioc_connections = conns / n;
  }
  for (auto& c : clients) report.clients.push_back(c->take_log());
  std::sort(report.clients.begin(), report.clients.end(),
            [](const ClientLog& a, const ClientLog& b) { return a.id < b.id; });

  clients.clear();
  gateway.reset();
  iocs.clear();
  return report;
}

std::size_t valid_deliveries(const ClientLog& log) {
  std::size_t n = 0;
  for (const auto& line : log.deliveries) {
    if (line.find(" INVALID") == std::string::npos) ++n;
  }
  return n;
}

void fill_interruptions(const ScenarioSpec& spec, const VariantReport& baseline,
                        VariantReport& out) {
  for (auto& log : out.clients) {
    const ClientLog* base = nullptr;
    for (const auto& b : baseline.clients) {
      if (b.id == log.id) {
        base = &b;
        break;
      }
    }
    if (!base) continue;
    const auto base_n = valid_deliveries(*base);
    const auto got_n = valid_deliveries(log);
    const double missing =
        base_n > got_n ? static_cast<double>(base_n - got_n) : 0.0;
    // One delivery per PV per period: convert a missing-event count back
    // to seconds of outage.
    const double per_sec =
        static_cast<double>(std::max(spec.pvs_per_ioc, 1)) * 1000.0 /
        static_cast<double>(spec.period_ms);
    log.interruption_seconds = per_sec > 0 ? missing / per_sec : 0.0;
  }
}

}  // namespace

RunReport run_topology(const ScenarioSpec& spec) {
  RunReport report;
  report.spec = spec;
  report.variants.push_back(run_variant(spec, {"direct", false, -1.0, -1.0}));
  report.variants.push_back(run_variant(spec, {"gateway", true, -1.0, -1.0}));

  const VariantReport& direct = report.variants[0];
  const VariantReport& via = report.variants[1];
  if (direct.mean_ioc_fds > 0) {
    report.fd_reduction_pct =
        100.0 * (direct.mean_ioc_fds - via.mean_ioc_fds) / direct.mean_ioc_fds;
  }
  if (direct.mean_ioc_cpu > 0) {
    report.cpu_reduction_pct =
        100.0 * (direct.mean_ioc_cpu - via.mean_ioc_cpu) / direct.mean_ioc_cpu;
  }

  // Structural expectations: fan-in to one connection per IOC.
  if (spec.clients_per_ioc > 0 && spec.pvs_per_ioc > 0) {
    const double want_direct = spec.clients_per_ioc + spec.critical_clients;
    if (4 + want_direct <= spec.fd_limit &&
        direct.mean_ioc_connections != want_direct) {
      report.assertion_failures.push_back(
          "direct variant: expected " + util::format_fixed(want_direct, 0) +
          " connections per IOC, saw " +
          util::format_fixed(direct.mean_ioc_connections, 2));
    }
    const double want_via = 1 + spec.critical_clients;
    if (via.mean_ioc_connections != want_via) {
      report.assertion_failures.push_back(
          "gateway variant: expected " + util::format_fixed(want_via, 0) +
          " connections per IOC, saw " +
          util::format_fixed(via.mean_ioc_connections, 2));
    }
  }
  if (spec.assert_min_fd_reduction_pct >= 0 &&
      report.fd_reduction_pct < spec.assert_min_fd_reduction_pct) {
    report.assertion_failures.push_back(
        "fd reduction " + util::format_fixed(report.fd_reduction_pct, 2) +
        "% below required " + util::format_fixed(spec.assert_min_fd_reduction_pct, 2) +
        "%");
  }
  if (spec.assert_min_cpu_reduction_pct >= 0 &&
      report.cpu_reduction_pct < spec.assert_min_cpu_reduction_pct) {
    report.assertion_failures.push_back(
        "cpu reduction " + util::format_fixed(report.cpu_reduction_pct, 2) +
        "% below required " + util::format_fixed(spec.assert_min_cpu_reduction_pct, 2) +
        "%");
  }
  return report;
}

RunReport inject_gateway_failure(const ScenarioSpec& spec, double kill_at_s,
                                 std::optional<double> restart_at_s) {
  if (spec.critical_clients < 1 || spec.clients_per_ioc < 1) {
    throw ScenarioError(
        "failure injection needs at least one critical and one public client");
  }
  RunReport report;
  report.spec = spec;
  report.variants.push_back(run_variant(spec, {"baseline", true, -1.0, -1.0}));
  report.variants.push_back(run_variant(
      spec, {"failure", true, kill_at_s, restart_at_s.value_or(-1.0)}));

  const VariantReport& baseline = report.variants[0];
  VariantReport& failure = report.variants[1];
  fill_interruptions(spec, baseline, failure);

  for (const auto& log : failure.clients) {
    if (log.critical) {
      const ClientLog* base = nullptr;
      for (const auto& b : baseline.clients) {
        if (b.id == log.id) base = &b;
      }
      if (!base || base->joined() != log.joined()) {
        report.assertion_failures.push_back(
            "critical client " + log.id + " delivery log differs from baseline");
      }
      if (log.interruption_seconds != 0.0) {
        report.assertion_failures.push_back("critical client " + log.id +
                                            " was interrupted");
      }
    } else {
      if (!log.saw_invalid) {
        report.assertion_failures.push_back("public client " + log.id +
                                            " never observed the failure");
      }
      if (restart_at_s && !log.recovered) {
        report.assertion_failures.push_back("public client " + log.id +
                                            " did not recover after restart");
      }
    }
  }
  return report;
}

RunReport run_scenario(const ScenarioSpec& spec) {
  if (spec.kill_gateway_at_s >= 0) {
    std::optional<double> restart;
    if (spec.restart_gateway_at_s >= 0) restart = spec.restart_gateway_at_s;
    return inject_gateway_failure(spec, spec.kill_gateway_at_s, restart);
  }
  return run_topology(spec);
}

}  // namespace pvgate::harness
