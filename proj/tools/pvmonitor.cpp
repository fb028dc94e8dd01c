// pvmonitor: subscribe to a PV and print every delivered value until
// --count values arrived, the connection dies, or SIGINT.

#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "pvgate/client/client.hpp"
#include "pvgate/net/real_reactor.hpp"

using namespace pvgate;

int main(int argc, char** argv) {
  CLI::App app{"monitor a process variable"};
  std::string addr_list = "127.0.0.1:5064", as_spec, pv;
  bool strict = false;
  long long count = -1;
  app.add_option("--addr-list", addr_list, "comma-separated endpoints, in preference order");
  app.add_flag("--strict-duplicates", strict, "fail when several endpoints serve the PV");
  app.add_option("--as", as_spec, "identity to present (USER@HOST)");
  app.add_option("--count", count, "exit after this many deliveries");
  app.add_option("pv", pv, "process variable name")->required();
  CLI11_PARSE(app, argc, argv);

  auto endpoints = net::parse_endpoint_list(addr_list);
  if (!endpoints) {
    std::cerr << "pvmonitor: bad --addr-list\n";
    return tool::kExitError;
  }
  net::RealReactor reactor;
  client::AddressList list{*endpoints, strict};
  client::ClientSession session(reactor, list, tool::parse_identity(as_spec));

  tool::install_signal_handlers();
  long long seen = 0;
  bool ended = false;
  client::ClientStatus end_status = client::ClientStatus::Ok;
  session.monitor(
      pv,
      [&](const proto::ChannelValue& v) {
        std::cout << v.timestamp_ns << " " << pv << " " << v.display() << " "
                  << proto::to_string(v.severity) << "\n";
        std::cout.flush();
        ++seen;
      },
      [&](client::ClientStatus st) {
        end_status = st;
        ended = true;
      });

  reactor.run_until(
      [&] { return ended || tool::g_stop || (count > 0 && seen >= count); },
      365ull * 24 * 3600 * net::kNsPerSec);

  if (ended) {
    switch (end_status) {
      case client::ClientStatus::NotFound:
        std::cerr << "pvmonitor: " << pv << " not found\n";
        return tool::kExitNotFound;
      case client::ClientStatus::DuplicatePv:
        std::cerr << "pvmonitor: " << pv << " is served by more than one endpoint\n";
        return tool::kExitDuplicate;
      case client::ClientStatus::AccessDenied:
        std::cerr << "pvmonitor: access denied\n";
        return tool::kExitDenied;
      default:
        std::cerr << "pvmonitor: connection lost\n";
        return tool::kExitError;
    }
  }
  return tool::kExitOk;
}
