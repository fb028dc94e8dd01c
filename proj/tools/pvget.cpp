// pvget: resolve a PV over the address list and print one value.

#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "pvgate/client/client.hpp"
#include "pvgate/net/real_reactor.hpp"

using namespace pvgate;

int main(int argc, char** argv) {
  CLI::App app{"read one process variable"};
  std::string addr_list = "127.0.0.1:5064", as_spec, pv;
  bool strict = false;
  app.add_option("--addr-list", addr_list, "comma-separated endpoints, in preference order");
  app.add_flag("--strict-duplicates", strict, "fail when several endpoints serve the PV");
  app.add_option("--as", as_spec, "identity to present (USER@HOST)");
  app.add_option("pv", pv, "process variable name")->required();
  CLI11_PARSE(app, argc, argv);

  auto endpoints = net::parse_endpoint_list(addr_list);
  if (!endpoints) {
    std::cerr << "pvget: bad --addr-list\n";
    return tool::kExitError;
  }
  net::RealReactor reactor;
  client::AddressList list{*endpoints, strict};
  client::ClientSession session(reactor, list, tool::parse_identity(as_spec));

  bool done = false;
  client::GetResult result{};
  session.get(pv, [&](client::GetResult r) {
    result = r;
    done = true;
  });
  reactor.run_until([&] { return done; }, 10 * net::kNsPerSec);
  if (!done) {
    std::cerr << "pvget: timed out\n";
    return tool::kExitError;
  }
  switch (result.status) {
    case client::ClientStatus::Ok:
      std::cout << pv << " " << result.value.display() << " "
                << proto::to_string(result.value.severity) << "\n";
      return tool::kExitOk;
    case client::ClientStatus::NotFound:
      std::cerr << "pvget: " << pv << " not found\n";
      return tool::kExitNotFound;
    case client::ClientStatus::DuplicatePv:
      std::cerr << "pvget: " << pv << " is served by more than one endpoint\n";
      return tool::kExitDuplicate;
    case client::ClientStatus::AccessDenied:
      std::cerr << "pvget: access denied\n";
      return tool::kExitDenied;
    default:
      std::cerr << "pvget: " << client::to_string(result.status) << "\n";
      return tool::kExitError;
  }
}
