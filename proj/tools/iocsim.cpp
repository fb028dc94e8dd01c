// iocsim: serve a PV database over the wire protocol with generator
// updates, ACF enforcement, and the fd/cpu saturation model. SIGUSR1
// dumps one-line JSON stats; the same numbers are served as synthetic
// <name>:stats:* PVs.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "common.hpp"
#include "json.hpp"
#include "pvgate/ioc/ioc_server.hpp"
#include "pvgate/net/real_reactor.hpp"
#include "pvgate/net/sim_reactor.hpp"

using namespace pvgate;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json stats_json(const ioc::IocServer& server) {
  auto s = server.stats();
  return nlohmann::json{{"name", server.name()},
                        {"connections", s.connections},
                        {"fds", s.fds},
                        {"event_posts_per_sec", s.event_posts_per_sec},
                        {"msgs_in_per_sec", s.msgs_in_per_sec},
                        {"cpu_proxy", s.cpu_proxy},
                        {"refused_connections", s.refused_connections},
                        {"degraded", s.degraded}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulated input/output controller"};
  std::string db_path, acf_path, listen = "127.0.0.1:5064", name = "ioc";
  double capacity = 1000;
  int fd_limit = 150;
  bool virtual_time = false;
  double duration_s = 10;
  app.add_option("--db", db_path, "PV database file")->required();
  app.add_option("--acf", acf_path, "access security file")->required();
  app.add_option("--listen", listen, "host:port (port 0 picks one)");
  app.add_option("--capacity", capacity, "messages/sec before saturation");
  app.add_option("--fd-limit", fd_limit, "file descriptor budget (4 + connections)");
  app.add_option("--name", name, "IOC name (prefixes the stats PVs)");
  app.add_flag("--virtual-time", virtual_time,
               "offline self-check: run on the simulated clock, print stats, exit");
  app.add_option("--duration", duration_s, "virtual seconds for --virtual-time");
  CLI11_PARSE(app, argc, argv);

  try {
    auto ep = net::Endpoint::parse(listen);
    if (!ep) throw std::runtime_error("bad --listen endpoint: " + listen);
    auto db = ioc::load_database(slurp(db_path));
    auto acl = acf::parse_acf(slurp(acf_path));

    ioc::IocConfig cfg;
    cfg.name = name;
    cfg.listen = *ep;
    cfg.capacity_msgs_per_sec = capacity;
    cfg.fd_limit = fd_limit;

    if (virtual_time) {
      net::SimReactor sim;
      ioc::IocServer server(sim, cfg, std::move(db), std::move(acl));
      if (!server.start()) throw std::runtime_error("cannot bind " + ep->str());
      sim.run_for(static_cast<std::uint64_t>(duration_s * net::kNsPerSec));
      std::cout << stats_json(server).dump() << "\n";
      return tool::kExitOk;
    }

    net::RealReactor reactor;
    cfg.timestamp_epoch_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::system_clock::now().time_since_epoch()).count());
    ioc::IocServer server(reactor, cfg, std::move(db), std::move(acl));
    if (!server.start()) throw std::runtime_error("cannot bind " + ep->str());
    std::cout << name << " listening on " << server.bound().str() << " ("
              << server.stats().fds << " fds, limit " << fd_limit << ")\n";
    std::cout.flush();

    tool::install_signal_handlers();
    while (!tool::g_stop) {
      reactor.run_until([] { return tool::g_stop || tool::g_dump_stats; },
                        net::kNsPerSec);
      if (tool::g_dump_stats) {
        tool::g_dump_stats = 0;
        std::cout << stats_json(server).dump() << std::endl;
      }
    }
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "iocsim: " << e.what() << "\n";
    return tool::kExitError;
  }
  return tool::kExitOk;
}
