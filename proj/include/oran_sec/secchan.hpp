#pragma once

// ESP-style secured channel for E2-lite frames.
//
// A sealed record is carried as
//
//   u32 total_length | u32 spi | u64 seq | nonce[12] | ciphertext | tag[T]
//
// (big-endian). The ciphertext encrypts  plaintext || pad || trailer  where
// the pad brings (plaintext + trailer) to a multiple of the profile's pad
// block and the trailer ends in (pad_length, next_header). The first 16
// header bytes are authenticated as associated data.
//
// The overhead model (H, P, B, T) describes the on-link size of a sealed
// frame: H + ceil((len + P) / B) * B + T. The record itself carries the
// body and tag exactly as modeled; H is the modeled header cost (outer IP,
// UDP encapsulation, ESP header, IV) charged by the link.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oran_sec/bytes.hpp"

namespace oran_sec::secchan {

enum class Suite {
  Null,
  Aes128CbcHmac,
  Aes256CbcHmac,
  Aes128Ccm,
  Aes256Ccm,
  Aes256Gcm,
  Chacha20Poly1305,
};

std::string_view suite_name(Suite s);
Suite parse_suite(std::string_view name);  // throws ConfigError
std::size_t suite_key_bytes(Suite s);

struct OverheadModel {
  std::size_t header = 0;     // H
  std::size_t trailer = 0;    // P
  std::size_t pad_block = 1;  // B
  std::size_t tag = 0;        // T

  bool operator==(const OverheadModel&) const = default;
};

inline constexpr OverheadModel kIdentityModel{0, 0, 1, 0};

// H + ceil((pt_len + P) / B) * B + T
std::size_t ciphertext_length(std::size_t pt_len, const OverheadModel& m);

struct LengthObservation {
  std::size_t plaintext = 0;
  std::size_t ciphertext = 0;
};

// Fits (H, P, B, T) to observed plaintext/ciphertext lengths. Lengths only
// pin down H + T, so `tag_hint` splits it (clipped to H + T). Among exact
// fits the smallest pad block wins, then the smallest trailer below it.
// Throws CalibrationError when underdetermined or when no exact fit exists;
// the message lists residuals of the best candidate.
OverheadModel calibrate_profile(std::span<const LengthObservation> obs, std::size_t tag_hint = 16);

using Key = std::array<std::uint8_t, 32>;

struct SecurityProfile {
  std::string name;
  Suite suite = Suite::Null;
  OverheadModel model = kIdentityModel;
  Key key{};
};

// Throws ConfigError when the model cannot be realized by the suite
// (wrong tag size, pad block not a multiple of the cipher block, ...).
void validate_profile(const SecurityProfile& p);

struct ShippedProfile {
  std::string_view name;
  Suite suite;
  OverheadModel model;
};

// NULL, the six cipher suites, and `paper-ccm` (AES256-CCM sealed with the
// 62 -> 138 byte calibration).
std::span<const ShippedProfile> shipped_profiles();
const ShippedProfile& shipped_profile(std::string_view name);  // throws ConfigError
SecurityProfile make_profile(std::string_view name, const Key& key);

inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kRecordHeaderBytes = 4 + 4 + 8 + kNonceBytes;
inline constexpr std::size_t kAadBytes = 16;

struct SealedRecord {
  std::uint32_t spi = 0;
  std::uint64_t seq = 0;
  std::array<std::uint8_t, kNonceBytes> nonce{};
  Bytes ciphertext;
  Bytes tag;

  std::size_t encoded_size() const { return kRecordHeaderBytes + ciphertext.size() + tag.size(); }
  Bytes encode() const;
  // `tag_bytes` comes from the profile; the wire does not carry it.
  // Throws FramingError on a length mismatch or short buffer.
  static SealedRecord decode(ByteView bytes, std::size_t tag_bytes);

  bool operator==(const SealedRecord&) const = default;
};

// 64-entry anti-replay window (RFC 4303 style). Sequence number 0 is never
// valid.
class ReplayWindow {
 public:
  static constexpr std::uint64_t kSize = 64;

  enum class Verdict { Fresh, Duplicate, Stale };

  Verdict check(std::uint64_t seq) const;
  // Precondition: check(seq) == Fresh.
  void update(std::uint64_t seq);

  std::uint64_t highest() const { return highest_; }
  std::uint64_t bitmap() const { return bitmap_; }

 private:
  std::uint64_t highest_ = 0;
  std::uint64_t bitmap_ = 0;
};

class Engine;

// Sending half of a channel. Single owner; not thread-safe.
class Sealer {
 public:
  Sealer(const SecurityProfile& profile, std::uint32_t spi, std::uint64_t first_seq = 1);
  ~Sealer();
  Sealer(Sealer&&) noexcept;
  Sealer& operator=(Sealer&&) noexcept;

  // Throws ChannelExpiredError once the 64-bit sequence space is used up.
  SealedRecord seal(ByteView frame_bytes);

  const SecurityProfile& profile() const { return profile_; }
  std::uint32_t spi() const { return spi_; }
  std::uint64_t next_seq() const { return next_seq_; }

 private:
  SecurityProfile profile_;
  std::uint32_t spi_;
  std::uint64_t next_seq_;
  bool exhausted_ = false;
  std::unique_ptr<Engine> engine_;
};

// Receiving half. Owns the replay window for one SPI.
class Opener {
 public:
  Opener(const SecurityProfile& profile, std::uint32_t spi);
  ~Opener();
  Opener(Opener&&) noexcept;
  Opener& operator=(Opener&&) noexcept;

  // Returns the plaintext iff the tag verifies and seq passes the window.
  // Throws ReplayError or AuthError; the window only moves on success.
  Bytes open(const SealedRecord& record);
  // Decodes then opens. Any malformed record is reported as AuthError.
  Bytes open_bytes(ByteView record_bytes);

  const ReplayWindow& window() const { return window_; }
  const SecurityProfile& profile() const { return profile_; }

 private:
  SecurityProfile profile_;
  std::uint32_t spi_;
  ReplayWindow window_;
  std::unique_ptr<Engine> engine_;
};

// Deterministic key material for tests and experiments (SHA-256 of a label).
Key derive_key(std::string_view label);
Key parse_key_hex(std::string_view hex);  // throws ConfigError

// Lowercase hex SHA-256 digest.
std::string sha256_hex(ByteView data);

}  // namespace oran_sec::secchan
