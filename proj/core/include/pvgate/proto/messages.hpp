#pragma once

// Per-command payload schemas. Each command code has exactly one schema:
//
//   SEARCH        pv name (u16-len string)
//   SEARCH_OK     governing ASG name (u16-len string)
//   SEARCH_FAIL   empty
//   CREATE_CHAN   pv name + user + host (three u16-len strings)
//   CHAN_OK       access bits u8 (bit0 read, bit1 write) + ASG name
//   CHAN_FAIL     empty
//   READ          empty
//   READ_REPLY    encoded ChannelValue
//   WRITE         encoded ChannelValue
//   WRITE_OK      empty
//   WRITE_DENIED  empty
//   EVENT_ADD     empty
//   EVENT         encoded ChannelValue
//   EVENT_CANCEL  empty
//   CLEAR_CHAN    empty
//   ECHO          empty
//   ECHO_REPLY    empty
//
// SEARCH_OK and CHAN_OK carry the PV's access security group so that a
// gateway can evaluate its merged rules without holding the IOC databases.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pvgate/proto/frame.hpp"
#include "pvgate/proto/value.hpp"

namespace pvgate::proto {

std::vector<std::uint8_t> search_payload(std::string_view pv);
std::optional<std::string> parse_search(const Frame& f);

std::vector<std::uint8_t> search_ok_payload(std::string_view asg);
std::optional<std::string> parse_search_ok(const Frame& f);

struct CreateChan {
  std::string pv;
  Identity who;
};
std::vector<std::uint8_t> create_chan_payload(std::string_view pv, const Identity& who);
std::optional<CreateChan> parse_create_chan(const Frame& f);

struct ChanOk {
  bool readable = false;
  bool writable = false;
  std::string asg;
};
std::vector<std::uint8_t> chan_ok_payload(bool readable, bool writable, std::string_view asg);
std::optional<ChanOk> parse_chan_ok(const Frame& f);

std::vector<std::uint8_t> value_payload(const ChannelValue& v);
std::optional<ChannelValue> parse_value_payload(const Frame& f);

}  // namespace pvgate::proto
