#include "pvgate/proto/value.hpp"

#include <bit>
#include <cstdio>

#include "wire.hpp"

namespace pvgate::proto {

const char* to_string(Dtype d) {
  switch (d) {
    case Dtype::Double: return "DOUBLE";
    case Dtype::Int32: return "INT32";
    case Dtype::String: return "STRING";
  }
  return "?";
}

const char* to_string(Severity s) {
  switch (s) {
    case Severity::None: return "NONE";
    case Severity::Minor: return "MINOR";
    case Severity::Major: return "MAJOR";
    case Severity::Invalid: return "INVALID";
  }
  return "?";
}

std::optional<Dtype> dtype_from_string(std::string_view s) {
  if (s == "DOUBLE") return Dtype::Double;
  if (s == "INT32") return Dtype::Int32;
  if (s == "STRING") return Dtype::String;
  return std::nullopt;
}

double ChannelValue::numeric() const {
  switch (dtype()) {
    case Dtype::Double: return dval();
    case Dtype::Int32: return static_cast<double>(ival());
    case Dtype::String: return 0.0;
  }
  return 0.0;
}

ChannelValue ChannelValue::make_double(double v, Severity s, std::uint64_t t_ns) {
  return ChannelValue{s, t_ns, v};
}

ChannelValue ChannelValue::make_int32(std::int32_t v, Severity s, std::uint64_t t_ns) {
  return ChannelValue{s, t_ns, v};
}

ChannelValue ChannelValue::make_string(std::string v, Severity s, std::uint64_t t_ns) {
  return ChannelValue{s, t_ns, std::move(v)};
}

bool ChannelValue::operator==(const ChannelValue& o) const {
  if (severity != o.severity || timestamp_ns != o.timestamp_ns) return false;
  if (value.index() != o.value.index()) return false;
  switch (dtype()) {
    case Dtype::Double:
      return std::bit_cast<std::uint64_t>(dval()) == std::bit_cast<std::uint64_t>(o.dval());
    case Dtype::Int32:
      return ival() == o.ival();
    case Dtype::String:
      return sval() == o.sval();
  }
  return false;
}

std::string ChannelValue::display() const {
  char buf[64];
  switch (dtype()) {
    case Dtype::Double:
      std::snprintf(buf, sizeof(buf), "%g", dval());
      return buf;
    case Dtype::Int32:
      std::snprintf(buf, sizeof(buf), "%d", ival());
      return buf;
    case Dtype::String:
      return sval();
  }
  return {};
}

void encode_value(const ChannelValue& v, std::vector<std::uint8_t>& out) {
  wire::put_u8(out, static_cast<std::uint8_t>(v.dtype()));
  wire::put_u8(out, static_cast<std::uint8_t>(v.severity));
  wire::put_u64(out, v.timestamp_ns);
  switch (v.dtype()) {
    case Dtype::Double:
      wire::put_u64(out, std::bit_cast<std::uint64_t>(v.dval()));
      break;
    case Dtype::Int32:
      wire::put_u32(out, static_cast<std::uint32_t>(v.ival()));
      break;
    case Dtype::String:
      if (v.sval().size() > kMaxStringValue) {
        throw EncodeError("STRING value exceeds 65535 bytes");
      }
      wire::put_string16(out, v.sval());
      break;
  }
}

std::vector<std::uint8_t> encode_value(const ChannelValue& v) {
  std::vector<std::uint8_t> out;
  encode_value(v, out);
  return out;
}

ValueDecodeResult decode_value(std::span<const std::uint8_t> in) {
  ValueDecodeResult r;
  wire::Reader rd(in);
  auto dtype = rd.u8();
  auto sev = rd.u8();
  auto ts = rd.u64();
  if (!dtype || !sev || !ts) return r;  // Truncated
  if (*dtype > static_cast<std::uint8_t>(Dtype::String)) {
    r.status = ValueDecodeStatus::BadDtype;
    return r;
  }
  if (*sev > static_cast<std::uint8_t>(Severity::Invalid)) {
    r.status = ValueDecodeStatus::BadSeverity;
    return r;
  }
  r.value.severity = static_cast<Severity>(*sev);
  r.value.timestamp_ns = *ts;
  switch (static_cast<Dtype>(*dtype)) {
    case Dtype::Double: {
      auto bits = rd.u64();
      if (!bits) return r;
      r.value.value = std::bit_cast<double>(*bits);
      break;
    }
    case Dtype::Int32: {
      auto bits = rd.u32();
      if (!bits) return r;
      r.value.value = static_cast<std::int32_t>(*bits);
      break;
    }
    case Dtype::String: {
      auto s = rd.string16();
      if (!s) return r;
      r.value.value = std::move(*s);
      break;
    }
  }
  r.status = ValueDecodeStatus::Ok;
  r.consumed = rd.consumed();
  return r;
}

}  // namespace pvgate::proto
