#include "pvgate/ioc/database.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "pvgate/util/hash.hpp"

namespace pvgate::ioc {

const char* to_string(Generator g) {
  switch (g) {
    case Generator::Const: return "CONST";
    case Generator::Counter: return "COUNTER";
    case Generator::Sine: return "SINE";
    case Generator::RandomWalk: return "RANDOM_WALK";
  }
  return "?";
}

DbParseError::DbParseError(const std::string& msg, int line_)
    : std::runtime_error(msg + " at line " + std::to_string(line_)), line(line_) {}

DuplicatePvError::DuplicatePvError(const std::string& name_)
    : std::runtime_error("duplicate pv '" + name_ + "'"), name(name_) {}

namespace {

std::optional<Generator> generator_from_string(std::string_view s) {
  if (s == "CONST") return Generator::Const;
  if (s == "COUNTER") return Generator::Counter;
  if (s == "SINE") return Generator::Sine;
  if (s == "RANDOM_WALK") return Generator::RandomWalk;
  return std::nullopt;
}

proto::ChannelValue initial_value(const PvRecord& rec) {
  using proto::ChannelValue;
  switch (rec.gen) {
    case Generator::Const:
      switch (rec.dtype) {
        case proto::Dtype::Double: return ChannelValue::make_double(rec.amplitude);
        case proto::Dtype::Int32:
          return ChannelValue::make_int32(static_cast<std::int32_t>(std::llround(rec.amplitude)));
        case proto::Dtype::String: {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%g", rec.amplitude);
          return ChannelValue::make_string(buf);
        }
      }
      break;
    case Generator::Counter: return ChannelValue::make_int32(0);
    case Generator::Sine: return ChannelValue::make_double(0.0);
    case Generator::RandomWalk: return ChannelValue::make_double(0.0);
  }
  return ChannelValue::make_double(0.0);
}

proto::Severity severity_for(double v, double amplitude) {
  return std::fabs(v) > 10.0 * std::fabs(amplitude) ? proto::Severity::Major
                                                    : proto::Severity::None;
}

}  // namespace

std::vector<PvRecord> load_database(std::string_view text) {
  std::vector<PvRecord> records;
  std::set<std::string> names;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string kw;
    if (!(ls >> kw)) continue;  // blank
    if (kw != "pv") throw DbParseError("expected 'pv'", lineno);
    PvRecord rec;
    std::string dtype, gen;
    long long period = 0;
    if (!(ls >> rec.name >> dtype >> rec.asg >> gen >> period >> rec.amplitude)) {
      throw DbParseError("malformed pv line", lineno);
    }
    std::string extra;
    if (ls >> extra) throw DbParseError("trailing tokens", lineno);
    if (rec.name.empty() || rec.name.size() > 60 ||
        rec.name.find('.') != std::string::npos) {
      throw DbParseError("bad pv name '" + rec.name + "'", lineno);
    }
    auto dt = proto::dtype_from_string(dtype);
    if (!dt) throw DbParseError("unknown dtype '" + dtype + "'", lineno);
    rec.dtype = *dt;
    auto g = generator_from_string(gen);
    if (!g) throw DbParseError("unknown generator '" + gen + "'", lineno);
    rec.gen = *g;
    if (period < 1 || period > 0xFFFFFFFFll) {
      throw DbParseError("period_ms must be >= 1", lineno);
    }
    rec.period_ms = static_cast<std::uint32_t>(period);
    // Generators have a fixed output type; the declared dtype must agree.
    if (rec.gen == Generator::Counter && rec.dtype != proto::Dtype::Int32) {
      throw DbParseError("COUNTER requires INT32", lineno);
    }
    if ((rec.gen == Generator::Sine || rec.gen == Generator::RandomWalk) &&
        rec.dtype != proto::Dtype::Double) {
      throw DbParseError(std::string(to_string(rec.gen)) + " requires DOUBLE", lineno);
    }
    if (!names.insert(rec.name).second) throw DuplicatePvError(rec.name);
    rec.walk_state = util::fnv1a64(rec.name);
    rec.current = initial_value(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

proto::ChannelValue generator_step(PvRecord& rec, std::uint64_t t_ms) {
  using proto::ChannelValue;
  const std::uint64_t t_ns = t_ms * 1'000'000ull;
  ChannelValue v;
  switch (rec.gen) {
    case Generator::Const:
      v = initial_value(rec);
      break;
    case Generator::Counter: {
      auto count = static_cast<std::int32_t>((t_ms / rec.period_ms) % 2147483648ull);
      v = ChannelValue::make_int32(count, severity_for(count, rec.amplitude));
      break;
    }
    case Generator::Sine: {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(t_ms) /
                           (1000.0 * static_cast<double>(rec.period_ms));
      const double x = rec.amplitude * std::sin(phase);
      v = ChannelValue::make_double(x, severity_for(x, rec.amplitude));
      break;
    }
    case Generator::RandomWalk: {
      const double step = util::uniform_range(rec.walk_state, -rec.amplitude, rec.amplitude);
      const double x = rec.current.numeric() + step;
      v = ChannelValue::make_double(x, severity_for(x, rec.amplitude));
      break;
    }
  }
  if (rec.gen == Generator::Const && rec.dtype != proto::Dtype::String) {
    v.severity = severity_for(v.numeric(), rec.amplitude);
  }
  v.timestamp_ns = t_ns;
  rec.current = v;
  return v;
}

}  // namespace pvgate::ioc
