#include "oran_sec/secchan.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/params.h>

#include <algorithm>
#include <cstring>
#include <limits>
#include <sstream>

#include "oran_sec/error.hpp"

namespace oran_sec::secchan {

namespace {

constexpr std::uint8_t kNextHeader = 0xE2;

struct SuiteInfo {
  Suite suite;
  std::string_view name;
  std::size_t key_bytes;
};

constexpr SuiteInfo kSuites[] = {
    {Suite::Null, "NULL", 0},
    {Suite::Aes128CbcHmac, "AES128-CBC-HMAC", 16},
    {Suite::Aes256CbcHmac, "AES256-CBC-HMAC", 32},
    {Suite::Aes128Ccm, "AES128-CCM", 16},
    {Suite::Aes256Ccm, "AES256-CCM", 32},
    {Suite::Aes256Gcm, "AES256-GCM", 32},
    {Suite::Chacha20Poly1305, "CHACHA20-POLY1305", 32},
};

// Modeled on-link header cost. AEAD: outer IPv4 20 + UDP encap 8 + ESP 8 +
// explicit IV 8. CBC: same with a 16 byte IV. paper-ccm adds 14 bytes of
// Ethernet and pads to the AES block.
constexpr OverheadModel kAeadModel{44, 2, 1, 16};
constexpr OverheadModel kCbcModel{52, 2, 16, 16};
constexpr OverheadModel kPaperCcmModel{58, 2, 16, 16};

constexpr ShippedProfile kShipped[] = {
    {"NULL", Suite::Null, kIdentityModel},
    {"AES128-CBC-HMAC", Suite::Aes128CbcHmac, kCbcModel},
    {"AES256-CBC-HMAC", Suite::Aes256CbcHmac, kCbcModel},
    {"AES128-CCM", Suite::Aes128Ccm, kAeadModel},
    {"AES256-CCM", Suite::Aes256Ccm, kAeadModel},
    {"AES256-GCM", Suite::Aes256Gcm, kAeadModel},
    {"CHACHA20-POLY1305", Suite::Chacha20Poly1305, kAeadModel},
    {"paper-ccm", Suite::Aes256Ccm, kPaperCcmModel},
};

std::size_t body_length(std::size_t pt_len, const OverheadModel& m) {
  const std::size_t raw = pt_len + m.trailer;
  return (raw + m.pad_block - 1) / m.pad_block * m.pad_block;
}

void check_ossl(int rc, const char* what) {
  if (rc <= 0) throw Error(std::string("OpenSSL failure: ") + what);
}

struct CtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;

CipherCtx new_ctx() {
  CipherCtx c(EVP_CIPHER_CTX_new());
  if (!c) throw Error("EVP_CIPHER_CTX_new failed");
  return c;
}

}  // namespace

// Per-suite cryptographic core. `aad` is the first kAadBytes of the record.
class Engine {
 public:
  virtual ~Engine() = default;
  virtual void seal(const std::uint8_t* nonce, ByteView aad, ByteView body, std::uint8_t* ct,
                    std::uint8_t* tag) = 0;
  // Returns false when authentication fails.
  virtual bool open(const std::uint8_t* nonce, ByteView aad, ByteView ct, ByteView tag,
                    std::uint8_t* body) = 0;
};

namespace {

class NullEngine final : public Engine {
 public:
  void seal(const std::uint8_t*, ByteView, ByteView body, std::uint8_t* ct,
            std::uint8_t*) override {
    std::memcpy(ct, body.data(), body.size());
  }
  bool open(const std::uint8_t*, ByteView, ByteView ct, ByteView, std::uint8_t* body) override {
    std::memcpy(body, ct.data(), ct.size());
    return true;
  }
};

// GCM, CCM and ChaCha20-Poly1305 through EVP. Contexts keep the key
// schedule; each message only re-keys the IV.
class AeadEngine final : public Engine {
 public:
  AeadEngine(const EVP_CIPHER* cipher, bool ccm, const Key& key, std::size_t tag_bytes)
      : ccm_(ccm), tag_bytes_(tag_bytes), enc_(new_ctx()), dec_(new_ctx()) {
    init(enc_.get(), cipher, key, true);
    init(dec_.get(), cipher, key, false);
  }

  void seal(const std::uint8_t* nonce, ByteView aad, ByteView body, std::uint8_t* ct,
            std::uint8_t* tag) override {
    EVP_CIPHER_CTX* c = enc_.get();
    int outl = 0;
    check_ossl(EVP_EncryptInit_ex(c, nullptr, nullptr, nullptr, nonce), "seal iv");
    if (ccm_) {
      check_ossl(EVP_EncryptUpdate(c, nullptr, &outl, nullptr, static_cast<int>(body.size())),
                 "ccm length");
    }
    check_ossl(EVP_EncryptUpdate(c, nullptr, &outl, aad.data(), static_cast<int>(aad.size())),
               "aad");
    check_ossl(EVP_EncryptUpdate(c, ct, &outl, body.data(), static_cast<int>(body.size())),
               "encrypt");
    int fin = 0;
    check_ossl(EVP_EncryptFinal_ex(c, ct + outl, &fin), "final");
    check_ossl(EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_GET_TAG, static_cast<int>(tag_bytes_), tag),
               "get tag");
  }

  bool open(const std::uint8_t* nonce, ByteView aad, ByteView ct, ByteView tag,
            std::uint8_t* body) override {
    EVP_CIPHER_CTX* c = dec_.get();
    int outl = 0;
    auto* tag_ptr = const_cast<std::uint8_t*>(tag.data());
    if (ccm_) {
      check_ossl(EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_SET_TAG, static_cast<int>(tag.size()),
                                     tag_ptr),
                 "ccm tag");
    }
    check_ossl(EVP_DecryptInit_ex(c, nullptr, nullptr, nullptr, nonce), "open iv");
    if (ccm_) {
      check_ossl(EVP_DecryptUpdate(c, nullptr, &outl, nullptr, static_cast<int>(ct.size())),
                 "ccm length");
    }
    check_ossl(EVP_DecryptUpdate(c, nullptr, &outl, aad.data(), static_cast<int>(aad.size())),
               "aad");
    if (ccm_) {
      // CCM verifies inside the single data update.
      return EVP_DecryptUpdate(c, body, &outl, ct.data(), static_cast<int>(ct.size())) > 0;
    }
    check_ossl(EVP_DecryptUpdate(c, body, &outl, ct.data(), static_cast<int>(ct.size())),
               "decrypt");
    check_ossl(EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_SET_TAG, static_cast<int>(tag.size()),
                                   tag_ptr),
               "set tag");
    int fin = 0;
    return EVP_DecryptFinal_ex(c, body + outl, &fin) > 0;
  }

 private:
  void init(EVP_CIPHER_CTX* c, const EVP_CIPHER* cipher, const Key& key, bool enc) {
    check_ossl(EVP_CipherInit_ex(c, cipher, nullptr, nullptr, nullptr, enc ? 1 : 0), "init");
    check_ossl(EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_SET_IVLEN, static_cast<int>(kNonceBytes),
                                   nullptr),
               "ivlen");
    if (ccm_) {
      check_ossl(EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_SET_TAG, static_cast<int>(tag_bytes_),
                                     nullptr),
                 "ccm taglen");
    }
    check_ossl(EVP_CipherInit_ex(c, nullptr, nullptr, key.data(), nullptr, enc ? 1 : 0), "key");
  }

  bool ccm_;
  std::size_t tag_bytes_;
  CipherCtx enc_;
  CipherCtx dec_;
};

struct MacCtxDeleter {
  void operator()(EVP_MAC_CTX* c) const { EVP_MAC_CTX_free(c); }
};

// AES-CBC encrypt-then-MAC with HMAC-SHA256 truncated to the tag size.
// The CBC IV is AES_K(nonce || 0^4), the MAC key is HMAC_K("e2lt mac").
class CbcHmacEngine final : public Engine {
 public:
  CbcHmacEngine(std::size_t key_bytes, const Key& key, std::size_t tag_bytes)
      : tag_bytes_(tag_bytes), enc_(new_ctx()), dec_(new_ctx()), ecb_(new_ctx()) {
    const EVP_CIPHER* cbc = key_bytes == 16 ? EVP_aes_128_cbc() : EVP_aes_256_cbc();
    const EVP_CIPHER* ecb = key_bytes == 16 ? EVP_aes_128_ecb() : EVP_aes_256_ecb();
    check_ossl(EVP_EncryptInit_ex(enc_.get(), cbc, nullptr, key.data(), nullptr), "cbc enc");
    check_ossl(EVP_DecryptInit_ex(dec_.get(), cbc, nullptr, key.data(), nullptr), "cbc dec");
    check_ossl(EVP_EncryptInit_ex(ecb_.get(), ecb, nullptr, key.data(), nullptr), "ecb");
    EVP_CIPHER_CTX_set_padding(enc_.get(), 0);
    EVP_CIPHER_CTX_set_padding(dec_.get(), 0);
    EVP_CIPHER_CTX_set_padding(ecb_.get(), 0);

    EVP_MAC* mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
    if (!mac) throw Error("HMAC unavailable");
    mac_.reset(EVP_MAC_CTX_new(mac));
    EVP_MAC_free(mac);
    if (!mac_) throw Error("EVP_MAC_CTX_new failed");
    static char digest[] = "SHA256";  // params_ keeps the pointer
    params_[0] = OSSL_PARAM_construct_utf8_string("digest", digest, 0);
    params_[1] = OSSL_PARAM_construct_end();

    static constexpr char kLabel[] = "e2lt mac";
    check_ossl(EVP_MAC_init(mac_.get(), key.data(), key_bytes, params_), "mac key");
    check_ossl(EVP_MAC_update(mac_.get(), reinterpret_cast<const std::uint8_t*>(kLabel),
                              sizeof(kLabel) - 1),
               "mac label");
    std::size_t n = 0;
    check_ossl(EVP_MAC_final(mac_.get(), mac_key_.data(), &n, mac_key_.size()), "mac kdf");
    check_ossl(EVP_MAC_init(mac_.get(), mac_key_.data(), mac_key_.size(), params_), "mac init");
  }

  void seal(const std::uint8_t* nonce, ByteView aad, ByteView body, std::uint8_t* ct,
            std::uint8_t* tag) override {
    std::uint8_t iv[16];
    derive_iv(nonce, iv);
    int outl = 0;
    check_ossl(EVP_EncryptInit_ex(enc_.get(), nullptr, nullptr, nullptr, iv), "cbc iv");
    check_ossl(EVP_EncryptUpdate(enc_.get(), ct, &outl, body.data(), static_cast<int>(body.size())),
               "cbc encrypt");
    std::uint8_t full[32];
    compute_mac(nonce, aad, ByteView(ct, body.size()), full);
    std::memcpy(tag, full, tag_bytes_);
  }

  bool open(const std::uint8_t* nonce, ByteView aad, ByteView ct, ByteView tag,
            std::uint8_t* body) override {
    std::uint8_t full[32];
    compute_mac(nonce, aad, ct, full);
    if (tag.size() != tag_bytes_ || CRYPTO_memcmp(full, tag.data(), tag_bytes_) != 0) return false;
    if (ct.size() % 16 != 0) return false;
    std::uint8_t iv[16];
    derive_iv(nonce, iv);
    int outl = 0;
    check_ossl(EVP_DecryptInit_ex(dec_.get(), nullptr, nullptr, nullptr, iv), "cbc iv");
    check_ossl(EVP_DecryptUpdate(dec_.get(), body, &outl, ct.data(), static_cast<int>(ct.size())),
               "cbc decrypt");
    return true;
  }

 private:
  void derive_iv(const std::uint8_t* nonce, std::uint8_t* iv) {
    std::uint8_t block[16] = {};
    std::memcpy(block, nonce, kNonceBytes);
    int outl = 0;
    check_ossl(EVP_EncryptUpdate(ecb_.get(), iv, &outl, block, 16), "iv derive");
  }

  void compute_mac(const std::uint8_t* nonce, ByteView aad, ByteView ct, std::uint8_t* out) {
    EVP_MAC_CTX* m = mac_.get();
    // A keyless re-init does not reliably reset HMAC state on OpenSSL 3.0.
    check_ossl(EVP_MAC_init(m, mac_key_.data(), mac_key_.size(), params_), "mac reset");
    check_ossl(EVP_MAC_update(m, aad.data(), aad.size()), "mac aad");
    check_ossl(EVP_MAC_update(m, nonce, kNonceBytes), "mac nonce");
    check_ossl(EVP_MAC_update(m, ct.data(), ct.size()), "mac ct");
    std::size_t n = 0;
    check_ossl(EVP_MAC_final(m, out, &n, 32), "mac final");
  }

  std::size_t tag_bytes_;
  CipherCtx enc_;
  CipherCtx dec_;
  CipherCtx ecb_;
  std::unique_ptr<EVP_MAC_CTX, MacCtxDeleter> mac_;
  OSSL_PARAM params_[2];
  std::array<std::uint8_t, 32> mac_key_{};
};

std::unique_ptr<Engine> make_engine(const SecurityProfile& p) {
  validate_profile(p);
  const std::size_t t = p.model.tag;
  switch (p.suite) {
    case Suite::Null: return std::make_unique<NullEngine>();
    case Suite::Aes128CbcHmac: return std::make_unique<CbcHmacEngine>(16, p.key, t);
    case Suite::Aes256CbcHmac: return std::make_unique<CbcHmacEngine>(32, p.key, t);
    case Suite::Aes128Ccm:
      return std::make_unique<AeadEngine>(EVP_aes_128_ccm(), true, p.key, t);
    case Suite::Aes256Ccm:
      return std::make_unique<AeadEngine>(EVP_aes_256_ccm(), true, p.key, t);
    case Suite::Aes256Gcm:
      return std::make_unique<AeadEngine>(EVP_aes_256_gcm(), false, p.key, t);
    case Suite::Chacha20Poly1305:
      return std::make_unique<AeadEngine>(EVP_chacha20_poly1305(), false, p.key, t);
  }
  throw ConfigError("unknown suite");
}

void write_aad(std::uint8_t* out, std::uint32_t total, std::uint32_t spi, std::uint64_t seq) {
  Bytes b;
  b.reserve(kAadBytes);
  put_u32(b, total);
  put_u32(b, spi);
  put_u64(b, seq);
  std::memcpy(out, b.data(), kAadBytes);
}

std::array<std::uint8_t, kNonceBytes> make_nonce(std::uint32_t spi, std::uint64_t seq) {
  Bytes b;
  put_u32(b, spi);
  put_u64(b, seq);
  std::array<std::uint8_t, kNonceBytes> n{};
  std::memcpy(n.data(), b.data(), kNonceBytes);
  return n;
}

}  // namespace

std::string_view suite_name(Suite s) {
  for (const auto& i : kSuites)
    if (i.suite == s) return i.name;
  return "?";
}

Suite parse_suite(std::string_view name) {
  for (const auto& i : kSuites)
    if (i.name == name) return i.suite;
  throw ConfigError("unknown cipher suite '" + std::string(name) + "'");
}

std::size_t suite_key_bytes(Suite s) {
  for (const auto& i : kSuites)
    if (i.suite == s) return i.key_bytes;
  return 0;
}

std::size_t ciphertext_length(std::size_t pt_len, const OverheadModel& m) {
  return m.header + body_length(pt_len, m) + m.tag;
}

OverheadModel calibrate_profile(std::span<const LengthObservation> obs, std::size_t tag_hint) {
  if (obs.size() < 4) {
    throw CalibrationError("need at least 4 observations, got " + std::to_string(obs.size()));
  }
  std::vector<std::size_t> distinct;
  for (const auto& o : obs) {
    if (std::find(distinct.begin(), distinct.end(), o.plaintext) == distinct.end())
      distinct.push_back(o.plaintext);
  }
  if (distinct.size() < 2) throw CalibrationError("observations cover a single plaintext length");

  static constexpr std::size_t kBlocks[] = {1, 2, 4, 8, 16, 32, 64, 128};

  // For fixed (B, P) the model is ct = C + B*ceil((pt+P)/B) with C = H+T.
  // An exact fit means every observation implies the same C >= 0.
  struct Candidate {
    std::size_t block, trailer;
    long long constant;
    std::size_t mismatches;
  };
  std::optional<Candidate> best;
  for (std::size_t b : kBlocks) {
    for (std::size_t p = 0; p < b; ++p) {
      // Majority constant: most frequent implied C.
      std::vector<long long> implied;
      for (const auto& o : obs) {
        const auto body = static_cast<long long>((o.plaintext + p + b - 1) / b * b);
        implied.push_back(static_cast<long long>(o.ciphertext) - body);
      }
      std::vector<long long> sorted = implied;
      std::sort(sorted.begin(), sorted.end());
      long long mode = sorted[0];
      std::size_t mode_count = 0;
      for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        if (j - i > mode_count) {
          mode_count = j - i;
          mode = sorted[i];
        }
        i = j;
      }
      const std::size_t mismatches = obs.size() - mode_count + (mode < 0 ? obs.size() : 0);
      if (!best || mismatches < best->mismatches) best = Candidate{b, p, mode, mismatches};
      if (mismatches == 0) {
        const auto c = static_cast<std::size_t>(mode);
        const std::size_t t = std::min(tag_hint, c);
        return OverheadModel{c - t, p, b, t};
      }
    }
  }

  std::ostringstream msg;
  msg << "no exact fit; best candidate B=" << best->block << " P=" << best->trailer
      << " H+T=" << best->constant << " residuals:";
  for (const auto& o : obs) {
    const auto body =
        static_cast<long long>((o.plaintext + best->trailer + best->block - 1) / best->block *
                               best->block);
    msg << " (" << o.plaintext << ": " << static_cast<long long>(o.ciphertext) - body - best->constant
        << ")";
  }
  throw CalibrationError(msg.str());
}

void validate_profile(const SecurityProfile& p) {
  const auto& m = p.model;
  auto fail = [&](const std::string& why) {
    throw ConfigError("profile '" + p.name + "': " + why);
  };
  if (m.pad_block == 0) fail("pad block must be >= 1");
  if (p.suite == Suite::Null) {
    if (!(m.trailer == 0 && m.pad_block == 1 && m.tag == 0)) fail("NULL suite carries no trailer, padding or tag");
    return;
  }
  if (m.trailer < 2) fail("trailer must hold pad length and next header (P >= 2)");
  if (m.pad_block > 256) fail("pad block above 256 cannot encode its pad length");
  switch (p.suite) {
    case Suite::Aes128CbcHmac:
    case Suite::Aes256CbcHmac:
      if (m.pad_block % 16 != 0) fail("CBC needs a pad block that is a multiple of 16");
      if (m.tag == 0 || m.tag > 32) fail("HMAC-SHA256 tag must be 1..32 bytes");
      break;
    case Suite::Aes128Ccm:
    case Suite::Aes256Ccm:
      if (m.tag < 4 || m.tag > 16 || m.tag % 2 != 0) fail("CCM tag must be even, 4..16 bytes");
      break;
    case Suite::Aes256Gcm:
      if (m.tag < 12 || m.tag > 16) fail("GCM tag must be 12..16 bytes");
      break;
    case Suite::Chacha20Poly1305:
      if (m.tag != 16) fail("Poly1305 tag is 16 bytes");
      break;
    case Suite::Null: break;
  }
}

std::span<const ShippedProfile> shipped_profiles() { return kShipped; }

const ShippedProfile& shipped_profile(std::string_view name) {
  for (const auto& s : kShipped)
    if (s.name == name) return s;
  throw ConfigError("unknown security profile '" + std::string(name) + "'");
}

SecurityProfile make_profile(std::string_view name, const Key& key) {
  const auto& s = shipped_profile(name);
  SecurityProfile p{std::string(s.name), s.suite, s.model, key};
  validate_profile(p);
  return p;
}

Bytes SealedRecord::encode() const {
  Bytes out;
  out.reserve(encoded_size());
  put_u32(out, static_cast<std::uint32_t>(encoded_size()));
  put_u32(out, spi);
  put_u64(out, seq);
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

SealedRecord SealedRecord::decode(ByteView bytes, std::size_t tag_bytes) {
  if (bytes.size() < kRecordHeaderBytes + tag_bytes) throw FramingError("record too short");
  if (get_u32(bytes.data()) != bytes.size()) throw FramingError("record length mismatch");
  SealedRecord r;
  r.spi = get_u32(bytes.data() + 4);
  r.seq = get_u64(bytes.data() + 8);
  std::memcpy(r.nonce.data(), bytes.data() + 16, kNonceBytes);
  const std::size_t ct_len = bytes.size() - kRecordHeaderBytes - tag_bytes;
  r.ciphertext.assign(bytes.begin() + kRecordHeaderBytes,
                      bytes.begin() + static_cast<std::ptrdiff_t>(kRecordHeaderBytes + ct_len));
  r.tag.assign(bytes.end() - static_cast<std::ptrdiff_t>(tag_bytes), bytes.end());
  return r;
}

ReplayWindow::Verdict ReplayWindow::check(std::uint64_t seq) const {
  if (seq == 0) return Verdict::Stale;
  if (seq > highest_) return Verdict::Fresh;
  const std::uint64_t diff = highest_ - seq;
  if (diff >= kSize) return Verdict::Stale;
  return (bitmap_ >> diff) & 1U ? Verdict::Duplicate : Verdict::Fresh;
}

void ReplayWindow::update(std::uint64_t seq) {
  if (seq > highest_) {
    const std::uint64_t shift = seq - highest_;
    bitmap_ = shift < kSize ? (bitmap_ << shift) | 1U : 1U;
    highest_ = seq;
  } else {
    bitmap_ |= std::uint64_t{1} << (highest_ - seq);
  }
}

Sealer::Sealer(const SecurityProfile& profile, std::uint32_t spi, std::uint64_t first_seq)
    : profile_(profile), spi_(spi), next_seq_(first_seq), engine_(make_engine(profile)) {
  if (first_seq == 0) throw ParameterError("sequence numbers start at 1");
}
Sealer::~Sealer() = default;
Sealer::Sealer(Sealer&&) noexcept = default;
Sealer& Sealer::operator=(Sealer&&) noexcept = default;

SealedRecord Sealer::seal(ByteView frame_bytes) {
  if (exhausted_) throw ChannelExpiredError("sequence space exhausted");
  const auto& m = profile_.model;

  SealedRecord r;
  r.spi = spi_;
  r.seq = next_seq_;
  r.nonce = make_nonce(spi_, r.seq);

  const std::size_t body_len = body_length(frame_bytes.size(), m);
  Bytes body(frame_bytes.begin(), frame_bytes.end());
  if (profile_.suite != Suite::Null) {
    const std::size_t pad = body_len - frame_bytes.size() - m.trailer;
    for (std::size_t i = 1; i <= pad; ++i) body.push_back(static_cast<std::uint8_t>(i));
    body.resize(body_len - 2, 0);
    body.push_back(static_cast<std::uint8_t>(pad));
    body.push_back(kNextHeader);
  }

  r.ciphertext.resize(body_len);
  r.tag.resize(m.tag);
  std::uint8_t aad[kAadBytes];
  write_aad(aad, static_cast<std::uint32_t>(r.encoded_size()), spi_, r.seq);
  engine_->seal(r.nonce.data(), ByteView(aad, kAadBytes), body, r.ciphertext.data(),
                r.tag.data());

  if (next_seq_ == std::numeric_limits<std::uint64_t>::max()) {
    exhausted_ = true;
  } else {
    ++next_seq_;
  }
  return r;
}

Opener::Opener(const SecurityProfile& profile, std::uint32_t spi)
    : profile_(profile), spi_(spi), engine_(make_engine(profile)) {}
Opener::~Opener() = default;
Opener::Opener(Opener&&) noexcept = default;
Opener& Opener::operator=(Opener&&) noexcept = default;

Bytes Opener::open(const SealedRecord& record) {
  // Senders never emit seq 0, so it can only come from a forged header.
  if (record.seq == 0) throw AuthError("invalid sequence number 0");
  switch (window_.check(record.seq)) {
    case ReplayWindow::Verdict::Duplicate:
      throw ReplayError("duplicate sequence number " + std::to_string(record.seq));
    case ReplayWindow::Verdict::Stale:
      throw ReplayError("sequence number " + std::to_string(record.seq) + " below window");
    case ReplayWindow::Verdict::Fresh: break;
  }
  const auto& m = profile_.model;
  if (record.spi != spi_) throw AuthError("unknown spi");
  if (record.tag.size() != m.tag) throw AuthError("tag size mismatch");
  if (record.ciphertext.size() < m.trailer || record.ciphertext.size() % m.pad_block != 0) {
    throw AuthError("malformed ciphertext length");
  }
  if (profile_.suite != Suite::Null && record.nonce != make_nonce(record.spi, record.seq)) {
    throw AuthError("nonce does not match spi/seq");
  }

  std::uint8_t aad[kAadBytes];
  write_aad(aad, static_cast<std::uint32_t>(record.encoded_size()), record.spi, record.seq);
  Bytes body(record.ciphertext.size());
  if (!engine_->open(record.nonce.data(), ByteView(aad, kAadBytes), record.ciphertext, record.tag,
                     body.data())) {
    throw AuthError("authentication failed");
  }

  if (profile_.suite != Suite::Null) {
    const std::size_t pad = body[body.size() - 2];
    if (body.back() != kNextHeader || pad + m.trailer > body.size()) {
      throw AuthError("bad trailer");
    }
    body.resize(body.size() - m.trailer - pad);
  }
  window_.update(record.seq);
  return body;
}

Bytes Opener::open_bytes(ByteView record_bytes) {
  SealedRecord r;
  try {
    r = SealedRecord::decode(record_bytes, profile_.model.tag);
  } catch (const FramingError& e) {
    throw AuthError(std::string("malformed record: ") + e.what());
  }
  return open(r);
}

Key derive_key(std::string_view label) {
  Key k{};
  unsigned int n = 0;
  check_ossl(EVP_Digest(label.data(), label.size(), k.data(), &n, EVP_sha256(), nullptr),
             "sha256");
  return k;
}

std::string sha256_hex(ByteView data) {
  std::array<std::uint8_t, 32> d{};
  unsigned int n = 0;
  check_ossl(EVP_Digest(data.data(), data.size(), d.data(), &n, EVP_sha256(), nullptr), "sha256");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (auto b : d) {
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

Key parse_key_hex(std::string_view hex) {
  if (hex.size() != 64) throw ConfigError("key must be 64 hex characters");
  Key k{};
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ConfigError("key is not hex");
  };
  for (std::size_t i = 0; i < 32; ++i) {
    k[i] = static_cast<std::uint8_t>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
  }
  return k;
}

}  // namespace oran_sec::secchan
