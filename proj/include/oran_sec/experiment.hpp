#pragma once

// Experiment configuration and the five runner commands. Each command
// writes its artifacts plus `resolved_config.json` into the output
// directory.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "json.hpp"
#include "oran_sec/attack.hpp"
#include "oran_sec/intelligence.hpp"
#include "oran_sec/kpi.hpp"
#include "oran_sec/linkbench.hpp"
#include "oran_sec/metrics.hpp"
#include "oran_sec/secchan.hpp"

namespace oran_sec::experiment {

inline constexpr int kSchemaVersion = 1;

struct LatencyConfig {
  std::vector<std::string> suites{"NULL", "AES256-GCM", "AES256-CCM", "CHACHA20-POLY1305",
                                  "AES256-CBC-HMAC"};
  std::vector<std::size_t> sizes{64, 128, 256, 512, 1024, 1400};
  std::size_t reps = 200;
  double timeout_s = 2.0;
};

struct ThroughputConfig {
  std::vector<std::string> suites{"NULL", "AES256-GCM", "AES256-CCM"};
  std::vector<double> rates_mbps{100, 250, 500, 750, 1000, 1500, 2000, 3000};
  double duration_s = 2.0;
  double max_duration_s = 5.0;  // 0 skips the unpaced run
  std::size_t frame_bytes = 1400;
  std::optional<double> rate_cap_bps;  // link rate; unset means unlimited
};

struct TrafficConfig {
  std::size_t ticks = 2000;
  std::size_t window = 10;
  double train_fraction = 0.8;
  kpi::Scenario scenario = kpi::Scenario::default_scenario();
  std::string dataset;  // existing stream CSV to use instead of generating
};

struct E2eConfig {
  std::size_t ticks = 500;
  double tamper_rate = 0.0;
  double replay_rate = 0.0;
  bool use_ae = true;
  // Applied to each RIC-side window before the decision when set.
  std::optional<attack::PerturbationSpec> perturbation;
};

struct Config {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  linkbench::LinkParams link{1e9, 50e-6};
  std::string profile = "AES256-GCM";
  std::string key_label = "oran-sec-bench";
  std::string key_hex;  // overrides key_label when set
  LatencyConfig latency;
  ThroughputConfig throughput;
  TrafficConfig traffic;
  intelligence::TrainConfig ae;
  metrics::AttackConfig attack;
  std::size_t attack_master_seeds = 1;  // seeds used: seed, seed + 1, ...
  std::string attack_model;             // trained in-process when empty
  E2eConfig e2e;

  secchan::Key key() const;
  void validate() const;  // throws ConfigError
};

// Unknown keys are rejected so typos surface. Throws ConfigError.
Config parse_config(const nlohmann::json& j);
Config load_config(const std::filesystem::path& path);
// Fully resolved form; key_hex is replaced by its SHA-256 fingerprint.
nlohmann::json to_json(const Config& c);

// Indication payload: u64 tick, then per slice u8 slice id, f64 throughput,
// f64 buffer, f64 requested PRBs, u32 UEs (big-endian, IEEE-754 bits).
inline constexpr std::size_t kIndicationBytes = 8 + kpi::kSlices * 29;
Bytes encode_indication(const kpi::Tick& tick);
kpi::Tick decode_indication(ByteView payload);  // throws ProtocolError

// Control payload: u64 tick, 3 x u8 scheduling policy, 3 x u16 PRBs.
inline constexpr std::size_t kControlBytes = 8 + 3 + 6;
Bytes encode_control(std::uint64_t tick, const intelligence::AgentAction& a);
std::pair<std::uint64_t, intelligence::AgentAction> decode_control(ByteView payload);

struct E2eCounters {
  std::uint64_t indications_sent = 0;
  std::uint64_t frames_on_link = 0;  // includes injected replays
  std::uint64_t frames_opened = 0;
  std::uint64_t rejected_auth = 0;
  std::uint64_t rejected_replay = 0;
  std::uint64_t tampered_injected = 0;
  std::uint64_t replayed_injected = 0;
  std::uint64_t indications_decoded = 0;
  std::uint64_t actions_taken = 0;
  std::uint64_t controls_received = 0;
};

void to_json(nlohmann::json& j, const E2eCounters& c);

struct E2eResult {
  E2eCounters counters;
  std::vector<std::pair<std::uint64_t, intelligence::AgentAction>> actions;  // RIC side, in order
  kpi::Stream stream;                                                     // gNB side
};

// gNB thread seals indications through an optional on-path adversary onto
// the forward link; the RIC thread opens them, decides once a full window
// of ticks has arrived, and sends controls back. `ae` may be null.
E2eResult run_e2e(const Config& cfg, const intelligence::Autoencoder* ae,
                  const kpi::NormStats& stats);

// Offline reference: decide() over every full window of the stream.
std::vector<std::pair<std::uint64_t, intelligence::AgentAction>> offline_actions(
    const kpi::Stream& stream, std::size_t window, const kpi::NormStats& stats,
    const intelligence::Autoencoder* ae);

// Commands. Each writes resolved_config.json first.
// The configured dataset file, or generated traffic when none is set.
kpi::Stream training_stream(const Config& cfg);
// Seeded train/validation split of `stream` as used by train-ae.
kpi::Dataset training_dataset(const Config& cfg, const kpi::Stream& stream);

void cmd_bench_latency(const Config& cfg, const std::filesystem::path& out);
void cmd_bench_throughput(const Config& cfg, const std::filesystem::path& out);
// Returns the trained model; writes dataset.csv, dataset_stats.json,
// model.bin, train_report.json.
intelligence::Autoencoder cmd_train_ae(const Config& cfg, const std::filesystem::path& out);
// attack_sim.csv, attack_summary.csv, attack_summary_by_seed.csv, attack_report.json
void cmd_attack_sim(const Config& cfg, const std::filesystem::path& out);
// e2e_counters.json, e2e_actions.csv
void cmd_e2e(const Config& cfg, const std::filesystem::path& out);

}  // namespace oran_sec::experiment
