#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pvgate/proto/value.hpp"

namespace pvgate::ioc {

enum class Generator : std::uint8_t { Const, Counter, Sine, RandomWalk };

const char* to_string(Generator g);

// One process variable: a generator spec, its access security group, and
// the current sample.
struct PvRecord {
  std::string name;  // unique in a database, no '.', at most 60 chars
  proto::Dtype dtype = proto::Dtype::Double;
  std::string asg = "DEFAULT";
  Generator gen = Generator::Const;
  std::uint32_t period_ms = 1000;  // update period, >= 1
  double amplitude = 0.0;
  proto::ChannelValue current;
  std::uint64_t walk_state = 0;  // RANDOM_WALK PRNG state, seeded from the name
};

struct DbParseError : std::runtime_error {
  int line;
  DbParseError(const std::string& msg, int line_);
};

struct DuplicatePvError : std::runtime_error {
  std::string name;
  explicit DuplicatePvError(const std::string& name_);
};

// Line format: `pv <name> <dtype> <asg> <generator> <period_ms> <amplitude>`
// with `#` comments and blank lines. current is initialized to the
// generator's value at t=0 (a RANDOM_WALK starts at 0.0).
std::vector<PvRecord> load_database(std::string_view text);

// Advances the record to time t_ms and returns the new sample.
//   CONST        amplitude
//   COUNTER      floor(t_ms / period_ms) mod 2^31, as INT32
//   SINE         amplitude * sin(2*pi * t_ms / (1000 * period_ms))
//   RANDOM_WALK  previous + uniform(-amplitude, +amplitude), seeded
//                deterministically per record
// Severity is NONE unless |value| > 10*amplitude, which flags MAJOR.
proto::ChannelValue generator_step(PvRecord& rec, std::uint64_t t_ms);

}  // namespace pvgate::ioc
