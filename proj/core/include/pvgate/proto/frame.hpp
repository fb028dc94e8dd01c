#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace pvgate::proto {

inline constexpr std::uint16_t kMagic = 0xCA67;
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 12;
inline constexpr std::size_t kMaxPayload = 0xFFFFFFFFull;

enum class Command : std::uint8_t {
  Search = 0x01,
  SearchOk = 0x02,
  SearchFail = 0x03,
  CreateChan = 0x04,
  ChanOk = 0x05,
  ChanFail = 0x06,
  Read = 0x07,
  ReadReply = 0x08,
  Write = 0x09,
  WriteOk = 0x0A,
  WriteDenied = 0x0B,
  EventAdd = 0x0C,
  Event = 0x0D,
  EventCancel = 0x0E,
  ClearChan = 0x0F,
  Echo = 0x10,
  EchoReply = 0x11,
};

bool command_known(std::uint8_t code);
const char* to_string(Command c);

// magic u16 | version u8 | command u8 | cid u32 | length u32 | payload.
// Unknown command codes decode fine (opaque payload); dispatchers reject
// them and drop the connection.
struct Frame {
  std::uint8_t command = 0;
  std::uint32_t cid = 0;
  std::vector<std::uint8_t> payload;

  Frame() = default;
  Frame(Command c, std::uint32_t cid_, std::vector<std::uint8_t> p = {})
      : command(static_cast<std::uint8_t>(c)), cid(cid_), payload(std::move(p)) {}

  Command cmd() const { return static_cast<Command>(command); }
  bool operator==(const Frame&) const = default;
};

struct OversizeError : std::runtime_error {
  OversizeError() : std::runtime_error("frame payload exceeds 2^32-1 bytes") {}
};

void encode_frame(const Frame& f, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> encode_frame(const Frame& f);

enum class FrameDecodeStatus : std::uint8_t { Ok, NeedMore, BadMagic, BadVersion };

struct FrameDecodeResult {
  FrameDecodeStatus status = FrameDecodeStatus::NeedMore;
  Frame frame;
  std::size_t consumed = 0;
};

// Decodes one frame from the front of `in`. Magic/version are checked as
// soon as their bytes are present, before waiting for a full header.
FrameDecodeResult decode_frame(std::span<const std::uint8_t> in);

// Incremental decoder over a byte stream fed in arbitrary chunks.
// BadMagic/BadVersion are sticky; the owning connection must be dropped.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> data);
  FrameDecodeStatus next(Frame& out);
  bool failed() const {
    return error_ == FrameDecodeStatus::BadMagic || error_ == FrameDecodeStatus::BadVersion;
  }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  FrameDecodeStatus error_ = FrameDecodeStatus::Ok;
};

}  // namespace pvgate::proto
