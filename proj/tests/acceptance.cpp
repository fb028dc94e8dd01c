// Acceptance suite. Each case checks one numbered claim end to end and
// prints exactly one "PASS criterion N: ..." / "FAIL criterion N: ..."
// line. Everything runs under virtual time except where noted.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "pvgate/util/format.hpp"

#include "doctest.h"
#include "helpers.hpp"
#include "pvgate/client/client.hpp"
#include "pvgate/gw/gateway.hpp"
#include "pvgate/harness/report.hpp"
#include "pvgate/harness/runner.hpp"
#include "pvgate/ioc/ioc_server.hpp"
#include "pvgate/net/sim_reactor.hpp"

using namespace pvgate;
using client::ClientSession;
using client::ClientStatus;
using gw::CacheState;
using gw::Gateway;
using net::Endpoint;
using net::SimReactor;
using proto::ChannelValue;
using proto::Command;
using proto::Identity;
using testutil::FrameTap;
using testutil::Rng;

namespace {

struct Criterion {
  int n;
  std::string name;
  bool ok = true;

  Criterion(int n_, std::string name_) : n(n_), name(std::move(name_)) {}
  void expect(bool cond, const std::string& what) {
    CHECK_MESSAGE(cond, "criterion ", n, ": ", what);
    ok = ok && cond;
  }
  ~Criterion() {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, name.c_str());
    std::fflush(stdout);
  }
};

harness::ScenarioSpec standard_scenario() {
  harness::ScenarioSpec s;
  s.iocs = 2;
  s.pvs_per_ioc = 50;
  s.period_ms = 100;  // 10 Hz
  s.clients_per_ioc = 20;
  s.duration_s = 30;
  s.capacity = 20000;
  return s;
}

const harness::RunReport& standard_report() {
  static const harness::RunReport report = harness::run_topology(standard_scenario());
  return report;
}

const Identity kGwIdentity{"gwrun", "gw-host"};

// Shared scaffolding for the wire-level criteria.
struct MiniWorld {
  SimReactor sim;
  std::unique_ptr<ioc::IocServer> ioc0;
  std::unique_ptr<Gateway> gateway;
  FrameTap tap;

  void build(const std::string& db, const acf::Config& ioc_acl,
             const acf::Config& gw_acl, std::uint64_t hold_seconds = 7200) {
    ioc::IocConfig icfg;
    icfg.name = "ioc0";
    icfg.listen = Endpoint{"ioc0", 5064};
    icfg.capacity_msgs_per_sec = 1e9;
    ioc0 = std::make_unique<ioc::IocServer>(sim, icfg, ioc::load_database(db), ioc_acl);
    REQUIRE(ioc0->start());
    gw::GatewayConfig gcfg;
    gcfg.listen = Endpoint{"gw", 5064};
    gcfg.upstreams = {icfg.listen};
    gcfg.access = gw_acl;
    gcfg.hold_seconds = hold_seconds;
    gcfg.identity = kGwIdentity;
    gateway = std::make_unique<Gateway>(sim, gcfg);
    REQUIRE(gateway->start());
    tap.attach(sim, icfg.listen);
  }

  std::unique_ptr<ClientSession> client(const Identity& who) {
    client::AddressList list;
    list.endpoints = {Endpoint{"gw", 5064}};
    return std::make_unique<ClientSession>(sim, list, who);
  }
};

}  // namespace

TEST_CASE("criterion 1: fan-in holds IOC fds at 5 for any client population") {
  Criterion cr(1, "fan-in keeps one upstream connection per IOC for every M");
  for (int m : {1, 5, 20, 50}) {
    harness::ScenarioSpec s;
    s.iocs = 1;
    s.pvs_per_ioc = 10;
    s.period_ms = 100;
    s.clients_per_ioc = m;
    s.duration_s = 10;  // well under the 30 s virtual budget
    s.capacity = 1e9;
    auto report = harness::run_topology(s);
    const auto* direct = report.variant("direct");
    const auto* via = report.variant("gateway");
    cr.expect(direct && via, "both variants ran (M=" + std::to_string(m) + ")");
    if (!direct || !via) continue;
    cr.expect(via->mean_ioc_connections == 1.0,
              "gateway variant holds exactly 1 IOC connection (M=" + std::to_string(m) + ")");
    cr.expect(via->mean_ioc_fds == 5.0,
              "gateway variant IOC fds == 5 (M=" + std::to_string(m) + ")");
    cr.expect(direct->mean_ioc_fds == 4.0 + m,
              "direct variant IOC fds == 4+M (M=" + std::to_string(m) + ")");
    const double expected_reduction = 100.0 * (1.0 - 5.0 / (4.0 + m));
    cr.expect(std::fabs(report.fd_reduction_pct - expected_reduction) < 1e-9,
              "reduction matches 1 - 5/(4+M) exactly (M=" + std::to_string(m) + ")");
    if (m >= 5) {
      cr.expect(report.fd_reduction_pct >= 25.0,
                "reduction at least 25% (M=" + std::to_string(m) + ")");
    }
    cr.expect(report.ok(), "harness assertions hold (M=" + std::to_string(m) + ")");
  }
}

TEST_CASE("criterion 2: cpu-proxy reduction matches the linear load model") {
  Criterion cr(2, "standard scenario cpu reduction is 95% +/- 1% and >= 20%");
  const auto& report = standard_report();
  cr.expect(report.ok(), "harness assertions hold");
  // Model: per-IOC direct load M*P*r events/s vs P*r via the gateway,
  // so the reduction is 1 - 1/M with M = 20 monitors per IOC.
  const double model = 100.0 * (1.0 - 1.0 / 20.0);
  cr.expect(std::fabs(report.cpu_reduction_pct - model) <= 1.0,
            "measured " + util::format_fixed(report.cpu_reduction_pct, 3) +
                "% vs model " + util::format_fixed(model, 3) + "% within 1%");
  cr.expect(report.cpu_reduction_pct >= 20.0, "reduction is at least 20%");

  const auto* direct = report.variant("direct");
  const double expected_direct = 20.0 * 50.0 * 10.0 / 20000.0;  // 0.5
  cr.expect(std::fabs(direct->mean_ioc_cpu - expected_direct) <= 0.005,
            "direct cpu_proxy sits at the model value 0.5");
}

TEST_CASE("criterion 3: hold window arithmetic at 7200 seconds") {
  Criterion cr(3, "resubscription inside the 2 h hold is free; eviction is strict");
  const auto wall_start = std::chrono::steady_clock::now();
  {
    MiniWorld w;
    w.build("pv ioc0:pv0 DOUBLE DEFAULT SINE 100 2\n", testutil::permissive_config(),
            testutil::permissive_config(), 7200);
    auto c = w.client({"u", "h"});

    auto mon = c->monitor("ioc0:pv0", [](const ChannelValue&) {});
    w.sim.run_for(2 * net::kNsPerSec);
    cr.expect(w.gateway->entry_state("ioc0:pv0") == CacheState::Active, "entry active");

    c->cancel_monitor(mon);
    w.sim.run_for(net::kNsPerSec);
    cr.expect(w.gateway->entry_state("ioc0:pv0") == CacheState::Inactive, "entry held");

    // Resubscribe within the hold: zero SEARCH / CREATE_CHAN upstream.
    const int search0 = w.tap.count(Command::Search);
    const int create0 = w.tap.count(Command::CreateChan);
    auto mon2 = c->monitor("ioc0:pv0", [](const ChannelValue&) {});
    w.sim.run_for(2 * net::kNsPerSec);
    cr.expect(w.gateway->entry_state("ioc0:pv0") == CacheState::Active, "reactivated");
    cr.expect(w.tap.count(Command::Search) - search0 == 0,
              "zero SEARCH frames on resubscribe within hold");
    cr.expect(w.tap.count(Command::CreateChan) - create0 == 0,
              "zero CREATE_CHAN frames on resubscribe within hold");

    // Unsubscribe, then probe the deadline edges: alive at +7199 s,
    // evicted by +7201 s.
    c->cancel_monitor(mon2);
    w.sim.run_for(net::kNsPerSec);
    cr.expect(w.gateway->entry_state("ioc0:pv0") == CacheState::Inactive, "held again");
    w.sim.run_for(7198 * net::kNsPerSec);  // now at unsubscribe + 7199 s
    cr.expect(w.gateway->entry_state("ioc0:pv0") == CacheState::Inactive,
              "still held at +7199 s");
    w.sim.run_for(2 * net::kNsPerSec);  // +7201 s
    cr.expect(!w.gateway->entry_state("ioc0:pv0").has_value(), "evicted at +7201 s");
    w.sim.run_for(50 * net::kNsPerMs);  // let the final frame reach the wire
    cr.expect(w.tap.count(Command::ClearChan) == 1, "CLEAR_CHAN released the channel");

    // Cold again: exactly one SEARCH and one CREATE_CHAN to return.
    const int search1 = w.tap.count(Command::Search);
    const int create1 = w.tap.count(Command::CreateChan);
    auto mon3 = c->monitor("ioc0:pv0", [](const ChannelValue&) {});
    w.sim.run_for(3 * net::kNsPerSec);
    cr.expect(w.gateway->entry_state("ioc0:pv0") == CacheState::Active, "recreated");
    cr.expect(w.tap.count(Command::Search) - search1 == 1,
              "exactly one SEARCH after expiry");
    cr.expect(w.tap.count(Command::CreateChan) - create1 == 1,
              "exactly one CREATE_CHAN after expiry");
    c->cancel_monitor(mon3);
  }
  const auto wall =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - wall_start).count();
  cr.expect(wall < 5000, "7201 virtual seconds simulated in under 5 wall seconds");
}

TEST_CASE("criterion 4: stats identities under 10 PVs x 4 subscribers") {
  Criterion cr(4, "event_rate 100, post_rate 400, alive-active equals held");
  SimReactor sim;
  std::string db;
  for (int i = 0; i < 10; ++i) {
    db += "pv ioc0:pv" + std::to_string(i) + " DOUBLE DEFAULT SINE 100 1\n";
  }
  ioc::IocConfig icfg;
  icfg.name = "ioc0";
  icfg.listen = Endpoint{"ioc0", 5064};
  icfg.capacity_msgs_per_sec = 1e9;
  ioc::IocServer ioc0(sim, icfg, ioc::load_database(db), testutil::permissive_config());
  REQUIRE(ioc0.start());
  gw::GatewayConfig gcfg;
  gcfg.listen = Endpoint{"gw", 5064};
  gcfg.upstreams = {icfg.listen};
  gcfg.access = testutil::permissive_config();
  Gateway gateway(sim, gcfg);
  REQUIRE(gateway.start());

  // Eight clients, four per PV: clients 0-3 take pvs 0-4, clients 4-7
  // take pvs 5-9, so every PV has exactly four subscribers.
  client::AddressList list;
  list.endpoints = {Endpoint{"gw", 5064}};
  std::vector<std::unique_ptr<ClientSession>> clients;
  for (int k = 0; k < 8; ++k) {
    clients.push_back(
        std::make_unique<ClientSession>(sim, list, Identity{"u" + std::to_string(k), "h"}));
    const int lo = k < 4 ? 0 : 5;
    for (int i = lo; i < lo + 5; ++i) {
      clients.back()->monitor("ioc0:pv" + std::to_string(i), [](const ChannelValue&) {});
    }
  }
  sim.run_for(15 * net::kNsPerSec);
  auto s = gateway.stats();
  cr.expect(std::fabs(s.event_rate - 100.0) <= 10.0, "event_rate 100 +/- 10%");
  cr.expect(std::fabs(s.post_rate - 400.0) <= 40.0, "post_rate 400 +/- 10%");
  cr.expect(s.active_pvs == 10 && s.alive_pvs == 10, "all entries active while subscribed");

  // Half the clients disconnect; their five PVs go to the hold cache.
  for (int k = 4; k < 8; ++k) clients[static_cast<std::size_t>(k)].reset();
  sim.run_for(2 * net::kNsPerSec);
  auto s2 = gateway.stats();
  cr.expect(s2.active_pvs == 5, "five entries still active");
  cr.expect(s2.alive_pvs == 10, "held entries stay alive");
  cr.expect(s2.alive_pvs - s2.active_pvs == 5,
            "alive - active equals the held entry count");
}

TEST_CASE("criterion 5: security composition across the gateway") {
  Criterion cr(5, "write matrix (identity x augmentation) and identity substitution");
  const auto base = testutil::dchexpert_config();
  const auto value = ChannelValue::make_double(1.0);

  // (alice, augmented) -> WRITE_OK end to end.
  {
    MiniWorld w;
    w.build("pv ioc0:hv DOUBLE dch CONST 1000 0\n",
            acf::augment_for_gateway(base, kGwIdentity), base);
    gw::WriteOutcome out{};
    w.gateway->forward_write({"alice", "console1"}, "ioc0:hv", value,
                             [&](gw::WriteOutcome o) { out = o; });
    w.sim.run_for(2 * net::kNsPerSec);
    cr.expect(out == gw::WriteOutcome::Ok, "(alice, augmented) -> WRITE_OK");
    bool all_gateway_identity = !w.tap.create_chan_identities.empty();
    for (const auto& who : w.tap.create_chan_identities) {
      if (!(who == kGwIdentity)) all_gateway_identity = false;
    }
    cr.expect(all_gateway_identity, "every upstream CREATE_CHAN carries the gateway identity");
  }

  // (alice, not augmented) -> the IOC denies the gateway's write.
  {
    MiniWorld w;
    w.build("pv ioc0:hv DOUBLE dch CONST 1000 0\n", base, base);
    gw::WriteOutcome out{};
    w.gateway->forward_write({"alice", "console1"}, "ioc0:hv", value,
                             [&](gw::WriteOutcome o) { out = o; });
    w.sim.run_for(2 * net::kNsPerSec);
    cr.expect(out == gw::WriteOutcome::Denied, "(alice, not augmented) -> WRITE_DENIED");
    cr.expect(w.tap.count(Command::Write) == 1, "the denial came from the IOC");
    bool all_gateway_identity = !w.tap.create_chan_identities.empty();
    for (const auto& who : w.tap.create_chan_identities) {
      if (!(who == kGwIdentity)) all_gateway_identity = false;
    }
    cr.expect(all_gateway_identity, "upstream identity is the gateway's even when denied");
  }

  // (bob, either augmentation) -> denied at the gateway, zero upstream frames.
  for (bool augmented : {true, false}) {
    MiniWorld w;
    w.build("pv ioc0:hv DOUBLE dch CONST 1000 0\n",
            augmented ? acf::augment_for_gateway(base, kGwIdentity) : base, base);
    bool warmed = false;
    w.gateway->serve_read("ioc0:hv", {"alice", "console1"},
                          [&](gw::ReadOutcome r) { warmed = r.status == gw::ReadStatus::Ok; });
    w.sim.run_for(net::kNsPerSec);
    REQUIRE(warmed);
    w.tap.reset();

    gw::WriteOutcome out{};
    w.gateway->forward_write({"bob", "offsite"}, "ioc0:hv", value,
                             [&](gw::WriteOutcome o) { out = o; });
    w.sim.run_for(net::kNsPerSec);
    cr.expect(out == gw::WriteOutcome::Denied,
              std::string("(bob, ") + (augmented ? "augmented" : "not augmented") +
                  ") -> WRITE_DENIED at the gateway");
    cr.expect(w.tap.total_to_server() == 0,
              "zero upstream frames for bob's denied write");
  }
}

TEST_CASE("criterion 6: gateway failure leaves data-taking untouched") {
  Criterion cr(6, "critical logs byte-identical; gateway clients see INVALID in 10 s");
  harness::ScenarioSpec s;
  s.iocs = 1;
  s.pvs_per_ioc = 10;
  s.period_ms = 100;
  s.clients_per_ioc = 5;     // five public clients via the gateway
  s.critical_clients = 2;    // two direct clients
  s.duration_s = 30;
  s.capacity = 1e9;
  auto report = harness::inject_gateway_failure(s, 10.0, std::nullopt);
  cr.expect(report.ok(), "harness assertions hold");

  const auto* baseline = report.variant("baseline");
  const auto* failure = report.variant("failure");
  REQUIRE(baseline);
  REQUIRE(failure);
  int critical_seen = 0, public_seen = 0;
  for (const auto& log : failure->clients) {
    if (log.critical) {
      ++critical_seen;
      const harness::ClientLog* base = nullptr;
      for (const auto& b : baseline->clients) {
        if (b.id == log.id) base = &b;
      }
      cr.expect(base && base->joined() == log.joined(),
                "critical client " + log.id + " delivery log byte-identical");
      cr.expect(!log.deliveries.empty(), "critical client " + log.id + " took data");
    } else {
      ++public_seen;
      cr.expect(log.saw_invalid, "public client " + log.id + " observed the failure");
      cr.expect(log.first_invalid_ns <= 20 * net::kNsPerSec,
                "public client " + log.id + " flagged INVALID within 10 s of the kill");
    }
  }
  cr.expect(critical_seen == 2 && public_seen == 5, "expected client populations ran");
}

TEST_CASE("criterion 7: duplicate disambiguation on dual-visibility lists") {
  Criterion cr(7, "strict lists report DUPLICATE_PV; ordered lists pick list-first 100/100");
  SimReactor sim;
  ioc::IocConfig icfg;
  icfg.name = "ioc0";
  icfg.listen = Endpoint{"ioc0", 5064};
  ioc::IocServer ioc0(sim, icfg,
                      ioc::load_database("pv ioc0:pv0 DOUBLE DEFAULT SINE 100 1\n"),
                      testutil::permissive_config());
  REQUIRE(ioc0.start());
  gw::GatewayConfig gcfg;
  gcfg.listen = Endpoint{"gw", 5064};
  gcfg.upstreams = {icfg.listen};
  gcfg.access = testutil::permissive_config();
  Gateway gateway(sim, gcfg);
  REQUIRE(gateway.start());

  // The dual-homed view: this client can reach both the IOC itself and
  // the gateway, and both will claim the PV.
  client::AddressList strict;
  strict.endpoints = {Endpoint{"ioc0", 5064}, Endpoint{"gw", 5064}};
  strict.strict_duplicates = true;
  ClientSession strict_client(sim, strict, {"u", "h"});
  client::ResolveResult r{};
  strict_client.resolve("ioc0:pv0", [&](client::ResolveResult rr) { r = rr; });
  sim.run_for(3 * net::kNsPerSec);
  cr.expect(r.status == ClientStatus::DuplicatePv, "strict mode reports DUPLICATE_PV");

  client::AddressList ordered = strict;
  ordered.strict_duplicates = false;
  ClientSession direct_first(sim, ordered, {"u2", "h"});
  int direct_wins = 0;
  for (int i = 0; i < 100; ++i) {
    client::ResolveResult rr{};
    direct_first.resolve("ioc0:pv0", [&](client::ResolveResult x) { rr = x; });
    sim.run_for(net::kNsPerSec);
    if (rr.status == ClientStatus::Ok && rr.endpoint.str() == "ioc0:5064") ++direct_wins;
  }
  cr.expect(direct_wins == 100, "the IOC endpoint wins 100/100 trials");
}

TEST_CASE("criterion 8: protocol and ACF property suites") {
  Criterion cr(8, "10k codec round-trips, oracle-exact ACF, merge monotonicity x1000");
  // Frames.
  {
    Rng rng(0xACCE97);
    bool all = true;
    for (int i = 0; i < 10000; ++i) {
      proto::Frame f;
      f.command = static_cast<std::uint8_t>(1 + rng.below(17));
      f.cid = static_cast<std::uint32_t>(rng.u64());
      f.payload.resize(rng.below(128));
      for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng.u64());
      auto dec = proto::decode_frame(proto::encode_frame(f));
      if (dec.status != proto::FrameDecodeStatus::Ok || !(dec.frame == f)) all = false;
    }
    cr.expect(all, "10,000 random frames round-trip");
  }
  // Values.
  {
    Rng rng(0x7A15E5);
    bool all = true;
    for (int i = 0; i < 10000; ++i) {
      ChannelValue v;
      const auto sev = static_cast<proto::Severity>(rng.below(4));
      const std::uint64_t t = rng.u64();
      switch (rng.below(3)) {
        case 0: {
          double d;
          std::uint64_t bits = rng.u64();
          std::memcpy(&d, &bits, sizeof(d));
          v = ChannelValue::make_double(d, sev, t);
          break;
        }
        case 1:
          v = ChannelValue::make_int32(static_cast<std::int32_t>(rng.u64()), sev, t);
          break;
        default: {
          std::string str(rng.below(60), '\0');
          for (auto& c : str) c = static_cast<char>(rng.below(256));
          v = ChannelValue::make_string(std::move(str), sev, t);
          break;
        }
      }
      auto dec = proto::decode_value(proto::encode_value(v));
      if (dec.status != proto::ValueDecodeStatus::Ok || !(dec.value == v)) all = false;
    }
    cr.expect(all, "10,000 random values round-trip");
  }
  // ACF versus the brute-force oracle.
  {
    Rng rng(0xACF0);
    bool all = true;
    for (int round = 0; round < 200; ++round) {
      auto c = testutil::random_acf_config(rng);
      for (const auto& asg : testutil::oracle_asgs(c, c)) {
        for (const auto& u : testutil::kOracleUsers) {
          for (const auto& h : testutil::kOracleHosts) {
            for (acf::Level lv : {acf::Level::Read, acf::Level::Write}) {
              const Identity who{u, h};
              if (acf::evaluate(c, asg, who, lv).allow !=
                  testutil::naive_allow(c, asg, who, lv)) {
                all = false;
              }
            }
          }
        }
      }
    }
    cr.expect(all, "evaluate matches the naive oracle on the exhaustive grid");
  }
  // Merge monotonicity.
  {
    Rng rng(0x3E26E);
    bool all = true;
    for (int round = 0; round < 1000; ++round) {
      auto a = testutil::random_acf_config(rng);
      auto b = testutil::random_acf_config(rng);
      auto merged = acf::merge_acf({a, b}, acf::MergeMode::Union);
      for (const auto& asg : testutil::oracle_asgs(a, b)) {
        for (const auto& u : testutil::kOracleUsers) {
          for (const auto& h : testutil::kOracleHosts) {
            for (acf::Level lv : {acf::Level::Read, acf::Level::Write}) {
              const Identity who{u, h};
              if ((acf::evaluate(a, asg, who, lv).allow ||
                   acf::evaluate(b, asg, who, lv).allow) &&
                  !acf::evaluate(merged, asg, who, lv).allow) {
                all = false;
              }
            }
          }
        }
      }
    }
    cr.expect(all, "union merge is monotone over 1,000 random pairs");
  }
}

TEST_CASE("criterion 9: the chart pipeline reproduces the near-constant figure") {
  Criterion cr(9, "31-row CSV and a deterministic SVG with near-constant channel counts");
  const auto& report = standard_report();
  const auto* via = report.variant("gateway");
  REQUIRE(via);

  const std::string csv = "acceptance_standard.csv";
  harness::emit_csv(*via, csv);
  std::ifstream in(csv, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  auto rows = harness::parse_csv(ss.str());
  cr.expect(rows.size() == 32, "header plus 31 rows for t = 0..30");

  // Columns: t, alive, active, event_rate, post_rate, ...
  // After the first-second warm-up the channel counts never move.
  bool alive_constant = true, active_constant = true, alive_ge_active = true;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double t = std::stod(rows[r][0]);
    const double alive = std::stod(rows[r][1]);
    const double active = std::stod(rows[r][2]);
    if (alive < active) alive_ge_active = false;
    if (t >= 2.0) {
      if (alive != 100.0) alive_constant = false;
      if (active != 100.0) active_constant = false;
    }
  }
  cr.expect(alive_ge_active, "alive_pvs >= active_pvs in every row");
  cr.expect(alive_constant && active_constant,
            "alive and active channel counts are near constant");

  const std::string svg1 = "acceptance_fig1.svg";
  const std::string svg2 = "acceptance_fig2.svg";
  harness::render_chart(csv, svg1, {"alive_pvs", "active_pvs"});
  harness::render_chart(csv, svg2, {"alive_pvs", "active_pvs"});
  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s2;
    s2 << f.rdbuf();
    return s2.str();
  };
  const std::string a = slurp(svg1);
  cr.expect(!a.empty() && a == slurp(svg2), "chart bytes are deterministic");
  cr.expect(a.find("<polyline") != std::string::npos, "polylines rendered");
  std::remove(csv.c_str());
  std::remove(svg1.c_str());
  std::remove(svg2.c_str());
}
