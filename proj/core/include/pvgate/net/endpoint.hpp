#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pvgate::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  auto operator<=>(const Endpoint&) const = default;
  std::string str() const { return host + ":" + std::to_string(port); }

  static std::optional<Endpoint> parse(std::string_view s);
};

// "h1:p1,h2:p2" -> endpoints; returns nullopt if any element is malformed.
std::optional<std::vector<Endpoint>> parse_endpoint_list(std::string_view csv);

}  // namespace pvgate::net
