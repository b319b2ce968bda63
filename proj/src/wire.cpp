#include "oran_sec/wire.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "oran_sec/error.hpp"

namespace oran_sec::wire {

bool is_valid_msg_type(std::uint8_t raw) {
  return raw >= static_cast<std::uint8_t>(MsgType::Setup) &&
         raw <= static_cast<std::uint8_t>(MsgType::Data);
}

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::Setup: return "SETUP";
    case MsgType::Subscription: return "SUBSCRIPTION";
    case MsgType::Indication: return "INDICATION";
    case MsgType::Control: return "CONTROL";
    case MsgType::Echo: return "ECHO";
    case MsgType::EchoReply: return "ECHO_REPLY";
    case MsgType::Data: return "DATA";
  }
  return "?";
}

Bytes encode_frame(const E2Frame& frame) {
  if (frame.payload.size() > kMaxPayload) {
    throw EncodingError("payload of " + std::to_string(frame.payload.size()) +
                        " bytes exceeds the 2^24-1 limit");
  }
  const auto len = static_cast<std::uint32_t>(frame.payload.size());
  Bytes out(kHeaderBytes + len);
  std::copy(std::begin(kMagic), std::end(kMagic), out.begin());
  out[4] = frame.version;
  out[5] = static_cast<std::uint8_t>(frame.msg_type);
  for (int i = 0; i < 4; ++i) out[6 + i] = static_cast<std::uint8_t>(len >> (24 - 8 * i));
  std::copy(frame.payload.begin(), frame.payload.end(), out.begin() + kHeaderBytes);
  return out;
}

std::optional<Decoded> decode_frame(ByteView bytes) {
  // Check as much of the magic as is present so garbage fails fast.
  const std::size_t magic_avail = std::min(bytes.size(), sizeof(kMagic));
  if (std::memcmp(bytes.data(), kMagic, magic_avail) != 0) {
    throw FramingError("bad magic");
  }
  if (bytes.size() < kHeaderBytes) return std::nullopt;

  const std::uint8_t raw_type = bytes[5];
  if (!is_valid_msg_type(raw_type)) {
    throw ProtocolError("unknown msg_type " + std::to_string(raw_type));
  }
  const std::uint32_t len = get_u32(bytes.data() + 6);
  if (len > kMaxPayload) throw FramingError("length field exceeds 2^24-1");
  if (bytes.size() < kHeaderBytes + len) return std::nullopt;

  Decoded d;
  d.frame.version = bytes[4];
  d.frame.msg_type = static_cast<MsgType>(raw_type);
  d.frame.payload.assign(bytes.begin() + kHeaderBytes, bytes.begin() + kHeaderBytes + len);
  d.consumed = kHeaderBytes + len;
  return d;
}

void StreamDecoder::feed(ByteView chunk) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), chunk.begin(), chunk.end());
}

std::optional<E2Frame> StreamDecoder::next() {
  if (pos_ == buf_.size()) return std::nullopt;
  auto d = decode_frame(ByteView(buf_).subspan(pos_));
  if (!d) return std::nullopt;
  pos_ += d->consumed;
  if (pos_ > 4096 && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return std::move(d->frame);
}

E2Frame make_echo(std::uint64_t seq_no, std::uint64_t send_ns, std::size_t total_frame_bytes) {
  if (total_frame_bytes < kMinEchoFrameBytes) {
    throw ParameterError("echo frame must be at least " + std::to_string(kMinEchoFrameBytes) +
                         " bytes");
  }
  E2Frame f;
  f.msg_type = MsgType::Echo;
  f.payload.reserve(total_frame_bytes - kHeaderBytes);
  put_u64(f.payload, seq_no);
  put_u64(f.payload, send_ns);
  f.payload.resize(total_frame_bytes - kHeaderBytes, 0);
  return f;
}

E2Frame make_echo_reply(const E2Frame& echo) {
  E2Frame r = echo;
  r.msg_type = MsgType::EchoReply;
  return r;
}

EchoPayload parse_echo(const E2Frame& frame) {
  if (frame.msg_type != MsgType::Echo && frame.msg_type != MsgType::EchoReply) {
    throw ProtocolError("not an echo frame");
  }
  if (frame.payload.size() < kEchoFixedBytes) throw ProtocolError("short echo payload");
  return {get_u64(frame.payload.data()), get_u64(frame.payload.data() + 8),
          frame.payload.size() - kEchoFixedBytes};
}

}  // namespace oran_sec::wire
