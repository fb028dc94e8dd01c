#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvgate/gw/gateway.hpp"
#include "pvgate/harness/scenario.hpp"
#include "pvgate/ioc/ioc_server.hpp"

namespace pvgate::harness {

struct StatsSample {
  double t = 0.0;
  bool gateway_up = false;
  gw::GatewayStats gw;             // zeroed in the direct variant
  std::vector<ioc::IocStats> iocs;
};

struct ClientLog {
  std::string id;
  bool critical = false;
  std::vector<std::string> deliveries;  // canonical "<pv> <t_ns> <value> <sev>" lines
  bool saw_invalid = false;
  std::uint64_t first_invalid_ns = 0;
  bool recovered = false;               // valid deliveries after an outage
  double interruption_seconds = 0.0;    // filled against a baseline run

  std::string joined() const;
};

struct VariantReport {
  std::string name;  // "direct", "gateway", "baseline", "failure"
  std::vector<StatsSample> samples;
  std::vector<ClientLog> clients;
  // Derived from the final sample.
  double mean_ioc_cpu = 0.0;
  double mean_ioc_fds = 0.0;
  double mean_ioc_connections = 0.0;
};

struct RunReport {
  ScenarioSpec spec;
  std::vector<VariantReport> variants;
  double fd_reduction_pct = 0.0;   // (direct - gateway) / direct
  double cpu_reduction_pct = 0.0;
  std::vector<std::string> assertion_failures;

  bool ok() const { return assertion_failures.empty(); }
  const VariantReport* variant(const std::string& name) const;
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ChartError : std::runtime_error {
  explicit ChartError(const std::string& msg) : std::runtime_error(msg) {}
};

// One row per sample: t, alive_pvs, active_pvs, event_rate, post_rate,
// then ioc<i>_fds and ioc<i>_cpu per IOC. RFC-4180 quoting.
void emit_csv(const VariantReport& report, const std::string& path);

// Reads a CSV produced by emit_csv and renders the named columns against
// t as a self-contained SVG line chart. Byte-deterministic for identical
// input. Throws ChartError for a missing column.
void render_chart(const std::string& csv_path, const std::string& out_path,
                  const std::vector<std::string>& columns);

// Exposed for tests.
std::string csv_quote(const std::string& field);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace pvgate::harness
