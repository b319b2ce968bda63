#pragma once

// Adversarial inputs: Gaussian noise on normalized KPI windows, and
// byte-level tamper / replay of sealed records on the E2 channel.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "oran_sec/bytes.hpp"
#include "oran_sec/kpi.hpp"
#include "oran_sec/rng.hpp"
#include "oran_sec/secchan.hpp"

namespace oran_sec::attack {

// PaperLiteral draws n ~ N(x, sigma) and adds it to x, so E[x + n] = 2x.
// ZeroMean draws n ~ N(0, sigma). sigma is a standard deviation in both.
enum class NoiseMode { PaperLiteral, ZeroMean };

std::string_view mode_name(NoiseMode m);        // "PAPER_LITERAL", "ZERO_MEAN"
NoiseMode parse_mode(std::string_view name);    // throws ConfigError

struct PerturbationSpec {
  double sigma = 0;
  NoiseMode mode = NoiseMode::PaperLiteral;
  // Per-tick feature indices (slice * 4 + feature). Empty means all 12.
  std::vector<std::size_t> target_features;
  std::uint64_t seed = 0;
  // Keep noise from pushing a value out of [0, 2]; a clean value already
  // outside that band only bounds its own side. Off gives the raw result.
  bool clamp = true;

  void validate() const;  // throws ConfigError
  bool targets(std::size_t feature) const;
};

void to_json(nlohmann::json& j, const PerturbationSpec& s);
void from_json(const nlohmann::json& j, PerturbationSpec& s);

inline constexpr double kClampMax = 2.0;

// Deterministic in (spec, window). Draws one variate per targeted value in
// window order.
kpi::KpiWindow perturb_window(const kpi::KpiWindow& window, const PerturbationSpec& spec);

// Copy of the encoded record with one byte overwritten. Throws
// ParameterError if the index is outside the record.
Bytes tamper_record(ByteView encoded, std::size_t byte_index, std::uint8_t new_value);
Bytes tamper_record(const secchan::SealedRecord& record, std::size_t byte_index,
                    std::uint8_t new_value);

enum class OpenOutcome { Accepted, Replay, Auth };
std::string_view outcome_name(OpenOutcome o);

// Opens without throwing; the opener's window moves only on Accepted.
OpenOutcome try_open(secchan::Opener& opener, ByteView encoded);

// Resubmits a record the opener has already seen.
OpenOutcome replay_record(const secchan::SealedRecord& record, secchan::Opener& opener);

// On-path adversary for the end-to-end run. Each intercepted record is
// independently corrupted with probability tamper_rate (one byte XORed with
// a nonzero mask), and a copy of an earlier delivered record is injected
// after it with probability replay_rate.
class ChannelAdversary {
 public:
  ChannelAdversary(std::uint64_t seed, double tamper_rate, double replay_rate);

  std::vector<Bytes> intercept(Bytes record);

  std::uint64_t tampered() const { return tampered_; }
  std::uint64_t replayed() const { return replayed_; }

 private:
  Rng rng_;
  double tamper_rate_;
  double replay_rate_;
  Bytes last_clean_;
  std::uint64_t tampered_ = 0;
  std::uint64_t replayed_ = 0;
};

}  // namespace oran_sec::attack
