#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pvgate::proto {

enum class Dtype : std::uint8_t { Double = 0, Int32 = 1, String = 2 };
enum class Severity : std::uint8_t { None = 0, Minor = 1, Major = 2, Invalid = 3 };

const char* to_string(Dtype d);
const char* to_string(Severity s);
std::optional<Dtype> dtype_from_string(std::string_view s);

inline constexpr std::size_t kMaxStringValue = 65535;

// The unit of everything transported: a typed sample with alarm severity
// and a source timestamp (ns since the Unix epoch; 0-based under the
// simulated clock).
struct ChannelValue {
  Severity severity = Severity::None;
  std::uint64_t timestamp_ns = 0;
  std::variant<double, std::int32_t, std::string> value = 0.0;

  Dtype dtype() const { return static_cast<Dtype>(value.index()); }
  double dval() const { return std::get<double>(value); }
  std::int32_t ival() const { return std::get<std::int32_t>(value); }
  const std::string& sval() const { return std::get<std::string>(value); }

  // Numeric view regardless of dtype (strings yield 0); used for display
  // and severity thresholds.
  double numeric() const;

  static ChannelValue make_double(double v, Severity s = Severity::None,
                                  std::uint64_t t_ns = 0);
  static ChannelValue make_int32(std::int32_t v, Severity s = Severity::None,
                                 std::uint64_t t_ns = 0);
  static ChannelValue make_string(std::string v, Severity s = Severity::None,
                                  std::uint64_t t_ns = 0);

  // Doubles compare by bit pattern so NaN payloads round-trip as equal.
  bool operator==(const ChannelValue& o) const;

  std::string display() const;  // value rendered for CLI output
};

struct EncodeError : std::runtime_error {
  explicit EncodeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Layout, big-endian throughout:
//   dtype u8 | severity u8 | timestamp u64 | body
//   body: DOUBLE = raw IEEE-754 u64, INT32 = i32, STRING = u16 len + bytes
void encode_value(const ChannelValue& v, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> encode_value(const ChannelValue& v);

enum class ValueDecodeStatus : std::uint8_t { Ok, Truncated, BadDtype, BadSeverity };

struct ValueDecodeResult {
  ValueDecodeStatus status = ValueDecodeStatus::Truncated;
  ChannelValue value;
  std::size_t consumed = 0;
};

ValueDecodeResult decode_value(std::span<const std::uint8_t> in);

// Who a peer claims to be. Carried in CREATE_CHAN and trusted as
// presented: the model identifies, it does not authenticate.
struct Identity {
  std::string user;
  std::string host;
  auto operator<=>(const Identity&) const = default;
  std::string str() const { return user + "@" + host; }
};

}  // namespace pvgate::proto
