// pvput: write one value. Reads first to learn the PV's type, then
// encodes VALUE accordingly and relays the server's verdict.

#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "pvgate/client/client.hpp"
#include "pvgate/net/real_reactor.hpp"

using namespace pvgate;

int main(int argc, char** argv) {
  CLI::App app{"write one process variable"};
  std::string addr_list = "127.0.0.1:5064", as_spec, pv, value;
  bool strict = false;
  app.add_option("--addr-list", addr_list, "comma-separated endpoints, in preference order");
  app.add_flag("--strict-duplicates", strict, "fail when several endpoints serve the PV");
  app.add_option("--as", as_spec, "identity to present (USER@HOST)");
  app.add_option("pv", pv, "process variable name")->required();
  app.add_option("value", value, "value to write")->required();
  CLI11_PARSE(app, argc, argv);

  auto endpoints = net::parse_endpoint_list(addr_list);
  if (!endpoints) {
    std::cerr << "pvput: bad --addr-list\n";
    return tool::kExitError;
  }
  net::RealReactor reactor;
  client::AddressList list{*endpoints, strict};
  client::ClientSession session(reactor, list, tool::parse_identity(as_spec));

  bool have_type = false;
  client::GetResult current{};
  session.get(pv, [&](client::GetResult r) {
    current = r;
    have_type = true;
  });
  reactor.run_until([&] { return have_type; }, 10 * net::kNsPerSec);
  if (!have_type || current.status != client::ClientStatus::Ok) {
    switch (current.status) {
      case client::ClientStatus::NotFound:
        std::cerr << "pvput: " << pv << " not found\n";
        return tool::kExitNotFound;
      case client::ClientStatus::DuplicatePv:
        std::cerr << "pvput: " << pv << " is served by more than one endpoint\n";
        return tool::kExitDuplicate;
      case client::ClientStatus::AccessDenied:
        std::cerr << "pvput: access denied\n";
        return tool::kExitDenied;
      default:
        std::cerr << "pvput: cannot read current value\n";
        return tool::kExitError;
    }
  }

  proto::ChannelValue v;
  try {
    switch (current.value.dtype()) {
      case proto::Dtype::Double:
        v = proto::ChannelValue::make_double(std::stod(value));
        break;
      case proto::Dtype::Int32:
        v = proto::ChannelValue::make_int32(std::stoi(value));
        break;
      case proto::Dtype::String:
        v = proto::ChannelValue::make_string(value);
        break;
    }
  } catch (const std::exception&) {
    std::cerr << "pvput: '" << value << "' does not parse as "
              << proto::to_string(current.value.dtype()) << "\n";
    return tool::kExitError;
  }

  bool done = false;
  client::PutResult result{};
  session.put(pv, v, [&](client::PutResult r) {
    result = r;
    done = true;
  });
  reactor.run_until([&] { return done; }, 10 * net::kNsPerSec);
  if (!done) {
    std::cerr << "pvput: timed out\n";
    return tool::kExitError;
  }
  switch (result.status) {
    case client::ClientStatus::Ok:
      std::cout << pv << " <- " << v.display() << "\n";
      return tool::kExitOk;
    case client::ClientStatus::WriteDenied:
    case client::ClientStatus::AccessDenied:
      std::cerr << "pvput: write denied\n";
      return tool::kExitDenied;
    case client::ClientStatus::NotFound:
      return tool::kExitNotFound;
    case client::ClientStatus::DuplicatePv:
      return tool::kExitDuplicate;
    default:
      std::cerr << "pvput: " << client::to_string(result.status) << "\n";
      return tool::kExitError;
  }
}
