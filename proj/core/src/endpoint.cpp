#include "pvgate/net/endpoint.hpp"

namespace pvgate::net {

std::optional<Endpoint> Endpoint::parse(std::string_view s) {
  auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 >= s.size()) {
    return std::nullopt;
  }
  Endpoint ep;
  ep.host = std::string(s.substr(0, colon));
  std::uint32_t port = 0;
  for (char c : s.substr(colon + 1)) {
    if (c < '0' || c > '9') return std::nullopt;
    port = port * 10 + static_cast<std::uint32_t>(c - '0');
    if (port > 65535) return std::nullopt;
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

std::optional<std::vector<Endpoint>> parse_endpoint_list(std::string_view csv) {
  std::vector<Endpoint> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto comma = csv.find(',', start);
    auto piece = csv.substr(start, comma == std::string_view::npos ? csv.size() - start
                                                                   : comma - start);
    if (!piece.empty()) {
      auto ep = Endpoint::parse(piece);
      if (!ep) return std::nullopt;
      out.push_back(std::move(*ep));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

}  // namespace pvgate::net
