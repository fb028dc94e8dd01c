// pvgate: the caching protocol gateway. Clients connect here instead of
// at the IOCs; each IOC sees one connection and one subscription per PV
// no matter how many clients are watching.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "common.hpp"
#include "json.hpp"
#include "pvgate/gw/gateway.hpp"
#include "pvgate/net/real_reactor.hpp"
#include "pvgate/util/ini.hpp"

using namespace pvgate;

namespace {

nlohmann::json stats_json(const gw::Gateway& g) {
  auto s = g.stats();
  return nlohmann::json{{"alive_pvs", s.alive_pvs},
                        {"active_pvs", s.active_pvs},
                        {"client_count", s.client_count},
                        {"server_count", s.server_count},
                        {"fd_count", s.fd_count},
                        {"event_rate", s.event_rate},
                        {"post_rate", s.post_rate},
                        {"existtest_rate", s.existtest_rate}};
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caching channel gateway"};
  std::string listen, upstream, acf, stats_prefix, as_spec, config_path;
  long long hold_seconds = -1;
  long long poll_ms = -1;
  bool strict_merge = false;
  app.add_option("--listen", listen, "host:port to serve clients on");
  app.add_option("--upstream", upstream, "comma-separated IOC endpoints, probed in order");
  app.add_option("--acf", acf, "ACF file(s), comma-separated; merged at startup");
  app.add_option("--hold-seconds", hold_seconds, "cache hold window (default 7200)");
  app.add_option("--stats-prefix", stats_prefix, "local stats PV prefix (default gw:)");
  app.add_flag("--strict-merge", strict_merge, "fail on conflicting group definitions");
  app.add_option("--poll-ms", poll_ms, "poll upstream READs instead of subscribing");
  app.add_option("--as", as_spec, "identity presented upstream (USER@HOST)");
  app.add_option("--config", config_path, "INI file; flags override its keys");
  CLI11_PARSE(app, argc, argv);

  try {
    // Config file first, command line second.
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::runtime_error("cannot open " + config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      for (const auto& [key, value] : util::parse_ini(ss.str())) {
        if (key == "listen" && listen.empty()) listen = value;
        else if (key == "upstream" && upstream.empty()) upstream = value;
        else if (key == "acf" && acf.empty()) acf = value;
        else if (key == "hold_seconds" && hold_seconds < 0) hold_seconds = std::stoll(value);
        else if (key == "stats_prefix" && stats_prefix.empty()) stats_prefix = value;
        else if (key == "strict_merge" && !strict_merge) strict_merge = value == "true" || value == "1";
        else if (key == "poll_ms" && poll_ms < 0) poll_ms = std::stoll(value);
        else if (key == "as" && as_spec.empty()) as_spec = value;
        // unknown keys are ignored
      }
    }
    if (listen.empty() || upstream.empty() || acf.empty()) {
      throw std::runtime_error("--listen, --upstream and --acf are required "
                               "(by flag or config file)");
    }

    gw::GatewayConfig cfg;
    auto ep = net::Endpoint::parse(listen);
    if (!ep) throw std::runtime_error("bad --listen endpoint: " + listen);
    cfg.listen = *ep;
    auto ups = net::parse_endpoint_list(upstream);
    if (!ups) throw std::runtime_error("bad --upstream list: " + upstream);
    cfg.upstreams = *ups;
    cfg.access = gw::load_merged_acf(
        split_csv(acf), strict_merge ? acf::MergeMode::Strict : acf::MergeMode::Union);
    if (hold_seconds >= 0) cfg.hold_seconds = static_cast<std::uint64_t>(hold_seconds);
    if (!stats_prefix.empty()) cfg.stats_prefix = stats_prefix;
    if (poll_ms > 0) cfg.poll_ms = static_cast<std::uint32_t>(poll_ms);
    cfg.identity = tool::parse_identity(as_spec);
    cfg.timestamp_epoch_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::system_clock::now().time_since_epoch()).count());

    net::RealReactor reactor;
    gw::Gateway gateway(reactor, cfg);
    if (!gateway.start()) throw std::runtime_error("cannot bind " + cfg.listen.str());
    std::cout << "gateway listening on " << gateway.bound().str() << ", "
              << cfg.upstreams.size() << " upstream(s), hold " << cfg.hold_seconds
              << " s, identity " << cfg.identity.str() << "\n";
    std::cout.flush();

    tool::install_signal_handlers();
    while (!tool::g_stop) {
      reactor.run_until([] { return tool::g_stop || tool::g_dump_stats; },
                        net::kNsPerSec);
      if (tool::g_dump_stats) {
        tool::g_dump_stats = 0;
        std::cout << stats_json(gateway).dump() << std::endl;
      }
    }
    gateway.stop();
  } catch (const std::exception& e) {
    std::cerr << "pvgate: " << e.what() << "\n";
    return tool::kExitError;
  }
  return tool::kExitOk;
}
