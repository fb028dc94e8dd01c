#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "pvgate/ioc/database.hpp"
#include "pvgate/ioc/ioc_server.hpp"
#include "pvgate/net/sim_reactor.hpp"

using namespace pvgate;
using ioc::Generator;
using ioc::IocConfig;
using ioc::IocServer;
using ioc::PvRecord;
using net::Endpoint;
using net::SimReactor;
using proto::Command;
using proto::Frame;
using testutil::ScriptClient;

namespace {

std::vector<PvRecord> small_db(int pvs, std::uint32_t period_ms = 100) {
  std::string text;
  for (int i = 0; i < pvs; ++i) {
    text += "pv dch:pv" + std::to_string(i) + " DOUBLE dch SINE " +
            std::to_string(period_ms) + " 5.0\n";
  }
  return ioc::load_database(text);
}

IocServer make_ioc(SimReactor& sim, std::vector<PvRecord> db, const acf::Config& acl,
                   int fd_limit = 150, double capacity = 100000) {
  IocConfig cfg;
  cfg.name = "ioc";
  cfg.listen = Endpoint{"ioc", 5064};
  cfg.fd_limit = fd_limit;
  cfg.capacity_msgs_per_sec = capacity;
  return IocServer(sim, cfg, std::move(db), acl);
}

}  // namespace

TEST_CASE("db: the sine example parses and starts at zero") {
  auto db = ioc::load_database("pv dch:hv:v0 DOUBLE dch SINE 100 5.0\n");
  REQUIRE(db.size() == 1);
  CHECK(db[0].name == "dch:hv:v0");
  CHECK(db[0].asg == "dch");
  CHECK(db[0].gen == Generator::Sine);
  CHECK(db[0].current.dval() == 0.0);
  CHECK(db[0].current.severity == proto::Severity::None);
}

TEST_CASE("db: duplicates, comments, and malformed lines") {
  CHECK(ioc::load_database("").empty());
  CHECK(ioc::load_database("# only a comment\n\n").empty());
  CHECK_THROWS_AS(
      ioc::load_database("pv a DOUBLE x SINE 100 1\npv a DOUBLE x SINE 100 1\n"),
      ioc::DuplicatePvError);
  CHECK_THROWS_AS(ioc::load_database("pv a DOUBLE x SINE 0 1\n"), ioc::DbParseError);
  CHECK_THROWS_AS(ioc::load_database("pv a DOUBLE x WIGGLE 10 1\n"), ioc::DbParseError);
  CHECK_THROWS_AS(ioc::load_database("record a\n"), ioc::DbParseError);
  CHECK_THROWS_AS(ioc::load_database("pv bad.name DOUBLE x SINE 10 1\n"),
                  ioc::DbParseError);
  // Generators carry a fixed output type.
  CHECK_THROWS_AS(ioc::load_database("pv a DOUBLE x COUNTER 10 1\n"), ioc::DbParseError);
  CHECK_THROWS_AS(ioc::load_database("pv a INT32 x SINE 10 1\n"), ioc::DbParseError);
}

TEST_CASE("generator: sine hits full amplitude at a quarter of its value period") {
  auto db = ioc::load_database("pv s DOUBLE x SINE 100 5.0\n");
  // Updates every 100 ms; the value period is 1000*period_ms = 100 s, so
  // a quarter period is t = 25 s.
  auto v = ioc::generator_step(db[0], 25000);
  CHECK(v.dval() == doctest::Approx(5.0));
  CHECK(v.timestamp_ns == 25000ull * 1'000'000ull);
  CHECK(v.severity == proto::Severity::None);
}

TEST_CASE("generator: counter floors t over the period") {
  auto db = ioc::load_database("pv c INT32 x COUNTER 10 100\n");
  CHECK(ioc::generator_step(db[0], 95).ival() == 9);
  CHECK(ioc::generator_step(db[0], 100).ival() == 10);
  CHECK(db[0].current.ival() == 10);
}

TEST_CASE("generator: counter past ten-times-amplitude goes MAJOR") {
  auto db = ioc::load_database("pv c INT32 x COUNTER 1 1\n");
  CHECK(ioc::generator_step(db[0], 10).severity == proto::Severity::None);
  CHECK(ioc::generator_step(db[0], 11).severity == proto::Severity::Major);
}

TEST_CASE("generator: const emits the amplitude") {
  auto db = ioc::load_database("pv k DOUBLE x CONST 1000 3.0\n");
  CHECK(db[0].current.dval() == 3.0);
  CHECK(ioc::generator_step(db[0], 12345).dval() == 3.0);
}

TEST_CASE("generator: random walks replay identically per name") {
  auto a = ioc::load_database("pv w DOUBLE x RANDOM_WALK 10 1.0\n");
  auto b = ioc::load_database("pv w DOUBLE x RANDOM_WALK 10 1.0\n");
  for (int i = 1; i <= 200; ++i) {
    auto va = ioc::generator_step(a[0], static_cast<std::uint64_t>(i) * 10);
    auto vb = ioc::generator_step(b[0], static_cast<std::uint64_t>(i) * 10);
    CHECK(va == vb);
    CHECK(std::fabs(va.dval() - (i > 1 ? 0 : 0)) <= 200.0);  // bounded drift
  }
  // A different name walks a different path.
  auto c = ioc::load_database("pv w2 DOUBLE x RANDOM_WALK 10 1.0\n");
  bool diverged = false;
  for (int i = 1; i <= 20; ++i) {
    auto va = ioc::generator_step(a[0], 2000 + static_cast<std::uint64_t>(i) * 10);
    auto vc = ioc::generator_step(c[0], 2000 + static_cast<std::uint64_t>(i) * 10);
    if (va.dval() != vc.dval()) diverged = true;
  }
  CHECK(diverged);
}

TEST_CASE("ioc: fresh server reports 0 connections, 4 fds, idle cpu") {
  SimReactor sim;
  auto server = make_ioc(sim, small_db(2), testutil::permissive_config());
  REQUIRE(server.start());
  sim.run_for(net::kNsPerSec);
  auto s = server.stats();
  CHECK(s.connections == 0);
  CHECK(s.fds == 4);
  CHECK(s.cpu_proxy == 0.0);
  CHECK(s.refused_connections == 0);
}

TEST_CASE("ioc: fds are 4 plus one per connection") {
  SimReactor sim;
  auto server = make_ioc(sim, small_db(1), testutil::permissive_config());
  REQUIRE(server.start());
  std::vector<std::unique_ptr<ScriptClient>> clients;
  for (int i = 0; i < 20; ++i) {
    clients.push_back(std::make_unique<ScriptClient>());
    clients.back()->connect(sim, Endpoint{"ioc", 5064});
  }
  sim.run_for(net::kNsPerSec);
  CHECK(server.stats().connections == 20);
  CHECK(server.stats().fds == 24);
}

TEST_CASE("ioc: connections beyond the fd budget are refused") {
  SimReactor sim;
  auto server = make_ioc(sim, small_db(1), testutil::permissive_config(), 150);
  REQUIRE(server.start());
  std::vector<std::unique_ptr<ScriptClient>> clients;
  for (int i = 0; i < 147; ++i) {
    clients.push_back(std::make_unique<ScriptClient>());
    clients.back()->connect(sim, Endpoint{"ioc", 5064});
  }
  sim.run_for(net::kNsPerSec);
  // 4 + 146 = 150 is the ceiling; the 147th would make 151.
  auto s = server.stats();
  CHECK(s.connections == 146);
  CHECK(s.fds == 150);
  CHECK(s.refused_connections == 1);
  int closed = 0;
  for (const auto& c : clients) {
    if (c->closed) ++closed;
  }
  CHECK(closed == 1);
}

TEST_CASE("ioc: search, create, read, write, monitor round trip") {
  SimReactor sim;
  auto server = make_ioc(sim, ioc::load_database("pv dch:hv:v0 DOUBLE dch CONST 1000 3.0\n"),
                         testutil::dchexpert_config());
  REQUIRE(server.start());

  ScriptClient alice;
  alice.connect(sim, Endpoint{"ioc", 5064});
  sim.run_for(10 * net::kNsPerMs);
  REQUIRE(alice.conn);

  alice.send(Frame(Command::Search, 1, proto::search_payload("dch:hv:v0")));
  alice.send(Frame(Command::Search, 2, proto::search_payload("nope")));
  sim.run_for(10 * net::kNsPerMs);
  REQUIRE(alice.count(Command::SearchOk) == 1);
  CHECK(proto::parse_search_ok(*alice.last(Command::SearchOk)) == std::string("dch"));
  CHECK(alice.count(Command::SearchFail) == 1);

  alice.send(Frame(Command::CreateChan, 10,
                   proto::create_chan_payload("dch:hv:v0", {"alice", "console1"})));
  sim.run_for(10 * net::kNsPerMs);
  REQUIRE(alice.count(Command::ChanOk) == 1);
  auto ok = proto::parse_chan_ok(*alice.last(Command::ChanOk));
  REQUIRE(ok.has_value());
  CHECK(ok->readable);
  CHECK(ok->writable);  // alice is dchexpert
  CHECK(ok->asg == "dch");

  alice.send(Frame(Command::Read, 10));
  sim.run_for(10 * net::kNsPerMs);
  REQUIRE(alice.count(Command::ReadReply) == 1);
  auto v = proto::parse_value_payload(*alice.last(Command::ReadReply));
  REQUIRE(v.has_value());
  CHECK(v->dval() == 3.0);

  alice.send(Frame(Command::Write, 10,
                   proto::value_payload(proto::ChannelValue::make_double(9.0))));
  sim.run_for(10 * net::kNsPerMs);
  CHECK(alice.count(Command::WriteOk) == 1);

  alice.send(Frame(Command::Read, 10));
  sim.run_for(10 * net::kNsPerMs);
  auto v2 = proto::parse_value_payload(*alice.last(Command::ReadReply));
  CHECK(v2->dval() == 9.0);

  alice.send(Frame(Command::EventAdd, 10));
  sim.run_for(10 * net::kNsPerMs);
  CHECK(alice.count(Command::Event) == 1);  // current value immediately

  alice.send(Frame(Command::Echo, 0));
  sim.run_for(10 * net::kNsPerMs);
  CHECK(alice.count(Command::EchoReply) == 1);
}

TEST_CASE("ioc: writes are checked against the presented identity") {
  SimReactor sim;
  auto server = make_ioc(sim, ioc::load_database("pv dch:hv:v0 DOUBLE dch CONST 1000 3.0\n"),
                         testutil::dchexpert_config());
  REQUIRE(server.start());

  ScriptClient bob;
  bob.connect(sim, Endpoint{"ioc", 5064});
  sim.run_for(10 * net::kNsPerMs);
  bob.send(Frame(Command::CreateChan, 1,
                 proto::create_chan_payload("dch:hv:v0", {"bob", "offsite"})));
  sim.run_for(10 * net::kNsPerMs);
  auto ok = proto::parse_chan_ok(*bob.last(Command::ChanOk));
  REQUIRE(ok.has_value());
  CHECK_FALSE(ok->writable);
  bob.send(Frame(Command::Write, 1,
                 proto::value_payload(proto::ChannelValue::make_double(0.0))));
  sim.run_for(10 * net::kNsPerMs);
  CHECK(bob.count(Command::WriteDenied) == 1);
  CHECK(bob.count(Command::WriteOk) == 0);
}

TEST_CASE("ioc: unreadable channels are refused at creation") {
  SimReactor sim;
  // dch grants nothing to non-members and there is no DEFAULT read rule.
  auto acl = acf::parse_acf("UAG(dchexpert){alice} ASG(dch){RULE(1,WRITE){UAG(dchexpert)}}");
  auto server = make_ioc(sim, ioc::load_database("pv dch:hv:v0 DOUBLE dch CONST 1000 3.0\n"),
                         acl);
  REQUIRE(server.start());
  ScriptClient bob;
  bob.connect(sim, Endpoint{"ioc", 5064});
  sim.run_for(10 * net::kNsPerMs);
  bob.send(Frame(Command::CreateChan, 1,
                 proto::create_chan_payload("dch:hv:v0", {"bob", "offsite"})));
  sim.run_for(10 * net::kNsPerMs);
  CHECK(bob.count(Command::ChanFail) == 1);
  CHECK(bob.count(Command::ChanOk) == 0);
}

TEST_CASE("ioc: unknown commands drop only that connection") {
  SimReactor sim;
  auto server = make_ioc(sim, small_db(1), testutil::permissive_config());
  REQUIRE(server.start());
  ScriptClient good, bad;
  good.connect(sim, Endpoint{"ioc", 5064});
  bad.connect(sim, Endpoint{"ioc", 5064});
  sim.run_for(10 * net::kNsPerMs);
  Frame junk;
  junk.command = 0x77;
  bad.send(junk);
  sim.run_for(20 * net::kNsPerMs);
  CHECK(bad.closed);
  CHECK_FALSE(good.closed);
  CHECK(server.stats().connections == 1);
}

TEST_CASE("ioc: ten 10 Hz PVs with one subscriber post about 100 events per second") {
  SimReactor sim;
  auto server = make_ioc(sim, small_db(10, 100), testutil::permissive_config());
  REQUIRE(server.start());
  ScriptClient c;
  c.connect(sim, Endpoint{"ioc", 5064});
  sim.run_for(10 * net::kNsPerMs);
  for (int i = 0; i < 10; ++i) {
    c.send(Frame(Command::CreateChan, static_cast<std::uint32_t>(100 + i),
                 proto::create_chan_payload("dch:pv" + std::to_string(i), {"u", "h"})));
  }
  sim.run_for(20 * net::kNsPerMs);
  for (int i = 0; i < 10; ++i) {
    c.send(Frame(Command::EventAdd, static_cast<std::uint32_t>(100 + i)));
  }
  sim.run_for(12 * net::kNsPerSec);
  const double rate = server.stats().event_posts_per_sec;
  CHECK(rate == doctest::Approx(100.0).epsilon(0.10));
  // Subscription fan-out is per connection and per EVENT_ADD.
  CHECK(c.count(Command::Event) > 1000);
}

TEST_CASE("ioc: saturation halts posting until load drops, then recovers") {
  SimReactor sim;
  // Steady load is one 10 Hz PV (cpu_proxy 0.2 at capacity 50); the
  // flood must push the 10 s window total past 500 messages.
  auto server = make_ioc(sim, small_db(1, 100), testutil::permissive_config(),
                         150, /*capacity=*/50);
  REQUIRE(server.start());
  ScriptClient c;
  c.connect(sim, Endpoint{"ioc", 5064});
  sim.run_for(10 * net::kNsPerMs);
  c.send(Frame(Command::CreateChan, 1, proto::create_chan_payload("dch:pv0", {"u", "h"})));
  sim.run_for(10 * net::kNsPerMs);
  c.send(Frame(Command::EventAdd, 1));
  sim.run_for(2 * net::kNsPerSec);
  CHECK_FALSE(server.stats().degraded);

  for (int i = 0; i < 600; ++i) c.send(Frame(Command::Echo, 0));
  sim.run_for(2 * net::kNsPerSec);
  CHECK(server.stats().degraded);
  CHECK(server.stats().cpu_proxy == 1.0);

  const int during = c.count(Command::Event);
  sim.run_for(3 * net::kNsPerSec);
  CHECK(c.count(Command::Event) == during);  // posting is halted: a hang

  // The window slides past the burst, the queued input drains, and
  // service resumes.
  sim.run_for(14 * net::kNsPerSec);
  CHECK_FALSE(server.stats().degraded);
  sim.run_for(2 * net::kNsPerSec);
  CHECK(c.count(Command::Event) > during);
}

TEST_CASE("ioc: synthetic stats PVs answer READ") {
  SimReactor sim;
  auto server = make_ioc(sim, small_db(1), testutil::permissive_config());
  REQUIRE(server.start());
  ScriptClient c;
  c.connect(sim, Endpoint{"ioc", 5064});
  sim.run_for(10 * net::kNsPerMs);
  c.send(Frame(Command::Search, 1, proto::search_payload("ioc:stats:fds")));
  c.send(Frame(Command::CreateChan, 2,
               proto::create_chan_payload("ioc:stats:fds", {"u", "h"})));
  sim.run_for(10 * net::kNsPerMs);
  CHECK(c.count(Command::SearchOk) == 1);
  c.send(Frame(Command::Read, 2));
  sim.run_for(10 * net::kNsPerMs);
  auto v = proto::parse_value_payload(*c.last(Command::ReadReply));
  REQUIRE(v.has_value());
  CHECK(v->dval() == 5.0);  // 4 + this one connection
}

TEST_CASE("ioc: event timestamps are non-decreasing per subscription") {
  SimReactor sim;
  auto server = make_ioc(sim, small_db(3, 100), testutil::permissive_config());
  REQUIRE(server.start());
  ScriptClient c;
  c.connect(sim, Endpoint{"ioc", 5064});
  sim.run_for(10 * net::kNsPerMs);
  c.send(Frame(Command::CreateChan, 1, proto::create_chan_payload("dch:pv0", {"u", "h"})));
  sim.run_for(10 * net::kNsPerMs);
  c.send(Frame(Command::EventAdd, 1));
  sim.run_for(3 * net::kNsPerSec);
  std::uint64_t prev = 0;
  int events = 0;
  for (const auto& f : c.received) {
    if (f.cmd() != Command::Event) continue;
    auto v = proto::parse_value_payload(f);
    REQUIRE(v.has_value());
    CHECK(v->timestamp_ns >= prev);
    prev = v->timestamp_ns;
    ++events;
  }
  CHECK(events >= 29);
}

TEST_CASE("ioc: identical inputs replay identical event traces") {
  auto run_once = [] {
    SimReactor sim;
    auto server = make_ioc(sim, small_db(3, 100), testutil::permissive_config());
    REQUIRE(server.start());
    ScriptClient c;
    c.connect(sim, Endpoint{"ioc", 5064});
    sim.run_for(10 * net::kNsPerMs);
    for (int i = 0; i < 3; ++i) {
      c.send(Frame(Command::CreateChan, static_cast<std::uint32_t>(1 + i),
                   proto::create_chan_payload("dch:pv" + std::to_string(i), {"u", "h"})));
    }
    sim.run_for(10 * net::kNsPerMs);
    for (int i = 0; i < 3; ++i) {
      c.send(Frame(Command::EventAdd, static_cast<std::uint32_t>(1 + i)));
    }
    sim.run_for(2 * net::kNsPerSec);
    std::string trace;
    for (const auto& f : c.received) {
      trace += std::to_string(f.command) + ":" + std::to_string(f.cid) + ";";
      for (auto b : f.payload) trace += static_cast<char>('a' + (b & 15));
    }
    return trace;
  };
  CHECK(run_once() == run_once());
}
