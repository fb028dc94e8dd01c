#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pvgate::harness {

// Desk-scale experiment parameters. clients_per_ioc is the public
// monitor population M; critical clients always resolve direct-first and
// never depend on the gateway.
struct ScenarioSpec {
  int iocs = 1;
  int pvs_per_ioc = 10;
  std::string generators = "sine";  // sine | const | counter | walk | mixed
  std::uint32_t period_ms = 100;
  double amplitude = 1.0;
  int clients_per_ioc = 20;
  int critical_clients = 0;
  double duration_s = 30.0;
  std::uint64_t seed = 1;
  int fd_limit = 150;
  double capacity = 20000.0;
  std::uint64_t hold_seconds = 7200;
  double kill_gateway_at_s = -1.0;     // < 0: no failure injection
  double restart_gateway_at_s = -1.0;  // < 0: no restart
  std::string mode = "virtual";        // virtual | wall
  double assert_min_fd_reduction_pct = -1.0;
  double assert_min_cpu_reduction_pct = -1.0;
};

struct ScenarioError : std::runtime_error {
  explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

// INI keys match the field names (iocs=, pvs_per_ioc=, ...).
ScenarioSpec parse_scenario(std::string_view ini_text);

}  // namespace pvgate::harness
