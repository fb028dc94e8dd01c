#include "pvgate/proto/messages.hpp"

#include "wire.hpp"

namespace pvgate::proto {

std::vector<std::uint8_t> search_payload(std::string_view pv) {
  std::vector<std::uint8_t> out;
  wire::put_string16(out, pv);
  return out;
}

std::optional<std::string> parse_search(const Frame& f) {
  wire::Reader rd(f.payload);
  auto pv = rd.string16();
  if (!pv || rd.remaining() != 0) return std::nullopt;
  return pv;
}

std::vector<std::uint8_t> search_ok_payload(std::string_view asg) {
  std::vector<std::uint8_t> out;
  wire::put_string16(out, asg);
  return out;
}

std::optional<std::string> parse_search_ok(const Frame& f) {
  wire::Reader rd(f.payload);
  auto asg = rd.string16();
  if (!asg || rd.remaining() != 0) return std::nullopt;
  return asg;
}

std::vector<std::uint8_t> create_chan_payload(std::string_view pv, const Identity& who) {
  std::vector<std::uint8_t> out;
  wire::put_string16(out, pv);
  wire::put_string16(out, who.user);
  wire::put_string16(out, who.host);
  return out;
}

std::optional<CreateChan> parse_create_chan(const Frame& f) {
  wire::Reader rd(f.payload);
  auto pv = rd.string16();
  auto user = rd.string16();
  auto host = rd.string16();
  if (!pv || !user || !host || rd.remaining() != 0) return std::nullopt;
  if (user->empty()) return std::nullopt;  // non-empty user required
  return CreateChan{std::move(*pv), Identity{std::move(*user), std::move(*host)}};
}

std::vector<std::uint8_t> chan_ok_payload(bool readable, bool writable, std::string_view asg) {
  std::vector<std::uint8_t> out;
  wire::put_u8(out, static_cast<std::uint8_t>((readable ? 1 : 0) | (writable ? 2 : 0)));
  wire::put_string16(out, asg);
  return out;
}

std::optional<ChanOk> parse_chan_ok(const Frame& f) {
  wire::Reader rd(f.payload);
  auto bits = rd.u8();
  auto asg = rd.string16();
  if (!bits || !asg || rd.remaining() != 0) return std::nullopt;
  return ChanOk{(*bits & 1) != 0, (*bits & 2) != 0, std::move(*asg)};
}

std::vector<std::uint8_t> value_payload(const ChannelValue& v) { return encode_value(v); }

std::optional<ChannelValue> parse_value_payload(const Frame& f) {
  auto r = decode_value(f.payload);
  if (r.status != ValueDecodeStatus::Ok || r.consumed != f.payload.size()) return std::nullopt;
  return r.value;
}

}  // namespace pvgate::proto
