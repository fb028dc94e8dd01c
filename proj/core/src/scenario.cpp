#include "pvgate/harness/scenario.hpp"

#include <charconv>

#include "pvgate/util/ini.hpp"

namespace pvgate::harness {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw ScenarioError("bad numeric value for " + key + ": '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    return std::stoll(v);
  } catch (const std::exception&) {
    throw ScenarioError("bad integer value for " + key + ": '" + v + "'");
  }
}

}  // namespace

ScenarioSpec parse_scenario(std::string_view ini_text) {
  ScenarioSpec s;
  for (const auto& [key, value] : util::parse_ini(ini_text)) {
    if (key == "iocs") {
      s.iocs = static_cast<int>(to_int(key, value));
    } else if (key == "pvs_per_ioc") {
      s.pvs_per_ioc = static_cast<int>(to_int(key, value));
    } else if (key == "generators") {
      s.generators = value;
    } else if (key == "period_ms") {
      s.period_ms = static_cast<std::uint32_t>(to_int(key, value));
    } else if (key == "amplitude") {
      s.amplitude = to_double(key, value);
    } else if (key == "clients_per_ioc") {
      s.clients_per_ioc = static_cast<int>(to_int(key, value));
    } else if (key == "critical_clients") {
      s.critical_clients = static_cast<int>(to_int(key, value));
    } else if (key == "duration_s") {
      s.duration_s = to_double(key, value);
    } else if (key == "seed") {
      s.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "fd_limit") {
      s.fd_limit = static_cast<int>(to_int(key, value));
    } else if (key == "capacity") {
      s.capacity = to_double(key, value);
    } else if (key == "hold_seconds") {
      s.hold_seconds = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "kill_gateway_at_s") {
      s.kill_gateway_at_s = to_double(key, value);
    } else if (key == "restart_gateway_at_s") {
      s.restart_gateway_at_s = to_double(key, value);
    } else if (key == "mode") {
      s.mode = value;
    } else if (key == "assert_min_fd_reduction_pct") {
      s.assert_min_fd_reduction_pct = to_double(key, value);
    } else if (key == "assert_min_cpu_reduction_pct") {
      s.assert_min_cpu_reduction_pct = to_double(key, value);
    } else {
      throw ScenarioError("unknown scenario key: " + key);
    }
  }
  if (s.iocs < 1) throw ScenarioError("iocs must be >= 1");
  if (s.pvs_per_ioc < 0) throw ScenarioError("pvs_per_ioc must be >= 0");
  if (s.clients_per_ioc < 0) throw ScenarioError("clients_per_ioc must be >= 0");
  if (s.critical_clients < 0) throw ScenarioError("critical_clients must be >= 0");
  if (s.duration_s <= 0) throw ScenarioError("duration_s must be > 0");
  if (s.period_ms < 1) throw ScenarioError("period_ms must be >= 1");
  if (s.mode != "virtual" && s.mode != "wall") {
    throw ScenarioError("mode must be 'virtual' or 'wall'");
  }
  if (s.generators != "sine" && s.generators != "const" && s.generators != "counter" &&
      s.generators != "walk" && s.generators != "mixed") {
    throw ScenarioError("unknown generator mix: " + s.generators);
  }
  return s;
}

}  // namespace pvgate::harness
