#include "pvgate/proto/frame.hpp"

#include "wire.hpp"

namespace pvgate::proto {

bool command_known(std::uint8_t code) {
  return code >= static_cast<std::uint8_t>(Command::Search) &&
         code <= static_cast<std::uint8_t>(Command::EchoReply);
}

const char* to_string(Command c) {
  switch (c) {
    case Command::Search: return "SEARCH";
    case Command::SearchOk: return "SEARCH_OK";
    case Command::SearchFail: return "SEARCH_FAIL";
    case Command::CreateChan: return "CREATE_CHAN";
    case Command::ChanOk: return "CHAN_OK";
    case Command::ChanFail: return "CHAN_FAIL";
    case Command::Read: return "READ";
    case Command::ReadReply: return "READ_REPLY";
    case Command::Write: return "WRITE";
    case Command::WriteOk: return "WRITE_OK";
    case Command::WriteDenied: return "WRITE_DENIED";
    case Command::EventAdd: return "EVENT_ADD";
    case Command::Event: return "EVENT";
    case Command::EventCancel: return "EVENT_CANCEL";
    case Command::ClearChan: return "CLEAR_CHAN";
    case Command::Echo: return "ECHO";
    case Command::EchoReply: return "ECHO_REPLY";
  }
  return "UNKNOWN";
}

void encode_frame(const Frame& f, std::vector<std::uint8_t>& out) {
  if (f.payload.size() > kMaxPayload) throw OversizeError();
  out.reserve(out.size() + kFrameHeaderSize + f.payload.size());
  wire::put_u16(out, kMagic);
  wire::put_u8(out, kProtocolVersion);
  wire::put_u8(out, f.command);
  wire::put_u32(out, f.cid);
  wire::put_u32(out, static_cast<std::uint32_t>(f.payload.size()));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  std::vector<std::uint8_t> out;
  encode_frame(f, out);
  return out;
}

FrameDecodeResult decode_frame(std::span<const std::uint8_t> in) {
  FrameDecodeResult r;
  if (in.size() >= 1 && in[0] != (kMagic >> 8)) {
    r.status = FrameDecodeStatus::BadMagic;
    return r;
  }
  if (in.size() >= 2 && in[1] != (kMagic & 0xFF)) {
    r.status = FrameDecodeStatus::BadMagic;
    return r;
  }
  if (in.size() >= 3 && in[2] != kProtocolVersion) {
    r.status = FrameDecodeStatus::BadVersion;
    return r;
  }
  if (in.size() < kFrameHeaderSize) return r;  // NeedMore

  wire::Reader rd(in);
  rd.u16();  // magic, checked above
  rd.u8();   // version
  const std::uint8_t command = *rd.u8();
  const std::uint32_t cid = *rd.u32();
  const std::uint32_t len = *rd.u32();
  if (rd.remaining() < len) return r;  // NeedMore

  r.frame.command = command;
  r.frame.cid = cid;
  r.frame.payload.assign(in.begin() + kFrameHeaderSize,
                         in.begin() + kFrameHeaderSize + len);
  r.consumed = kFrameHeaderSize + len;
  r.status = FrameDecodeStatus::Ok;
  return r;
}

void FrameReader::feed(std::span<const std::uint8_t> data) {
  buf_.insert(buf_.end(), data.begin(), data.end());
}

FrameDecodeStatus FrameReader::next(Frame& out) {
  if (failed()) return error_;
  auto r = decode_frame(std::span(buf_).subspan(pos_));
  switch (r.status) {
    case FrameDecodeStatus::Ok:
      pos_ += r.consumed;
      out = std::move(r.frame);
      // Compact once the consumed prefix dominates the buffer.
      if (pos_ > 4096 && pos_ * 2 > buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
      }
      return FrameDecodeStatus::Ok;
    case FrameDecodeStatus::NeedMore:
      return FrameDecodeStatus::NeedMore;
    case FrameDecodeStatus::BadMagic:
    case FrameDecodeStatus::BadVersion:
      error_ = r.status;
      return error_;
  }
  return FrameDecodeStatus::NeedMore;
}

}  // namespace pvgate::proto
