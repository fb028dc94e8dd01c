#pragma once

#include <optional>
#include <string>

#include "pvgate/harness/report.hpp"
#include "pvgate/harness/scenario.hpp"

namespace pvgate::harness {

// Runs the DIRECT variant (every public client straight at its IOC) and
// the GATEWAY variant (public clients via the gateway, critical clients
// direct) with the same inputs, samples stats once per second, and
// derives the fd/cpu reductions from the final steady-state sample.
RunReport run_topology(const ScenarioSpec& spec);

// Runs the gateway variant twice: a no-failure baseline and a run where
// the gateway vanishes at kill_at_s (and optionally a fresh one starts
// at restart_at_s). Critical clients must be unaffected: their delivery
// logs are compared byte-for-byte against the baseline.
RunReport inject_gateway_failure(const ScenarioSpec& spec, double kill_at_s,
                                 std::optional<double> restart_at_s);

// Dispatches on spec.kill_gateway_at_s.
RunReport run_scenario(const ScenarioSpec& spec);

// Input generators shared with the tools.
std::string generate_db_text(const ScenarioSpec& spec, int ioc_index);
std::string permissive_acf_text();
std::string pv_name(int ioc_index, int pv_index);

}  // namespace pvgate::harness
