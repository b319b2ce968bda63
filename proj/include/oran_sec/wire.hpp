#pragma once

// E2-lite framing. Every frame on the wire is
//
//   +------+---------+----------+----------------+---------+
//   | E2LT | version | msg_type | length (u32BE) | payload |
//   +------+---------+----------+----------------+---------+
//      4        1          1            4          length
//
// See docs/wire.md for the payload layouts of ECHO/INDICATION/CONTROL.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "oran_sec/bytes.hpp"

namespace oran_sec::wire {

inline constexpr std::uint8_t kMagic[4] = {'E', '2', 'L', 'T'};
inline constexpr std::size_t kHeaderBytes = 10;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kMaxPayload = (std::size_t{1} << 24) - 1;

enum class MsgType : std::uint8_t {
  Setup = 1,
  Subscription = 2,
  Indication = 3,
  Control = 4,
  Echo = 5,
  EchoReply = 6,
  Data = 7,
};

bool is_valid_msg_type(std::uint8_t raw);
std::string_view to_string(MsgType t);

struct E2Frame {
  std::uint8_t version = kVersion;
  MsgType msg_type = MsgType::Data;
  Bytes payload;

  bool operator==(const E2Frame&) const = default;
};

struct Decoded {
  E2Frame frame;
  std::size_t consumed = 0;
};

// Throws EncodingError when the payload exceeds kMaxPayload.
Bytes encode_frame(const E2Frame& frame);

// Decodes the first frame in `bytes`. Returns nullopt when the buffer holds
// only a prefix of a frame (needs more data). Throws FramingError on bad
// magic or an oversized length field and ProtocolError on an unknown type.
std::optional<Decoded> decode_frame(ByteView bytes);

// Incremental decoder: feed arbitrary chunks, pop complete frames.
class StreamDecoder {
 public:
  void feed(ByteView chunk);
  std::optional<E2Frame> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  std::size_t pos_ = 0;
};

// ECHO / ECHO_REPLY body: seq_no, send_timestamp_ns, then zero padding.
struct EchoPayload {
  std::uint64_t seq_no = 0;
  std::uint64_t send_timestamp_ns = 0;
  std::size_t padding = 0;

  bool operator==(const EchoPayload&) const = default;
};

inline constexpr std::size_t kEchoFixedBytes = 16;
inline constexpr std::size_t kMinEchoFrameBytes = kHeaderBytes + kEchoFixedBytes;

// Builds an ECHO frame whose encoded length is exactly `total_frame_bytes`.
// Throws ParameterError if the size is below kMinEchoFrameBytes.
E2Frame make_echo(std::uint64_t seq_no, std::uint64_t send_ns, std::size_t total_frame_bytes);
// Mirrors an ECHO into an ECHO_REPLY carrying the same bytes.
E2Frame make_echo_reply(const E2Frame& echo);
EchoPayload parse_echo(const E2Frame& frame);

}  // namespace oran_sec::wire
