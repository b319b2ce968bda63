#pragma once

// Synthetic per-slice KPI traffic standing in for gNB reports, plus the
// fixed-length observation windows and normalized datasets built from it.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace oran_sec::kpi {

enum class Slice : std::uint8_t { Embb = 0, Urllc = 1, Mmtc = 2 };

inline constexpr std::size_t kSlices = 3;
inline constexpr std::size_t kFeatures = 4;  // throughput, buffer, requested PRBs, UEs
inline constexpr std::size_t kFeaturesPerTick = kSlices * kFeatures;

enum Feature : std::size_t { kThroughput = 0, kBuffer = 1, kRequestedPrbs = 2, kNumUes = 3 };

std::string_view slice_name(Slice s);
Slice parse_slice(std::string_view name);  // throws InputError

// Per-tick feature index (slice * 4 + feature) <-> "eMBB.buffer_bytes".
std::string feature_label(std::size_t index);
std::size_t parse_feature_label(std::string_view label);  // throws InputError

struct KpiReport {
  Slice slice = Slice::Embb;
  double throughput_mbps = 0;
  double buffer_bytes = 0;
  double requested_prbs = 0;
  std::uint32_t num_ues = 0;
  std::uint64_t timestamp = 0;

  bool operator==(const KpiReport&) const = default;
};

// One reporting period: a report per slice, in slice order.
struct Tick {
  std::uint64_t timestamp = 0;
  std::array<KpiReport, kSlices> reports{};

  bool operator==(const Tick&) const = default;
};

using Stream = std::vector<Tick>;

// Mean-reverting AR(1) process: x' = mean + phi (x - mean) + stddev sqrt(1 - phi^2) z.
struct Process {
  double mean = 0;
  double stddev = 0;
};

struct SliceScenario {
  std::array<Process, kFeatures> features{};
};

struct Scenario {
  std::array<SliceScenario, kSlices> slices{};
  double phi = 0.8;

  // eMBB high throughput, URLLC small buffers, mMTC many UEs.
  static Scenario default_scenario();
  void validate() const;  // throws ConfigError
};

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

// Deterministic given the seed. Throws ConfigError on an invalid scenario.
Stream generate_traffic(std::uint64_t seed, std::size_t ticks, const Scenario& scenario);

// W ticks x 3 slices x 4 features, flattened tick-major then slice then
// feature (index = (t * 3 + slice) * 4 + feature).
struct KpiWindow {
  std::size_t ticks = 0;
  std::vector<double> values;

  double at(std::size_t t, std::size_t slice, std::size_t feature) const {
    return values[(t * kSlices + slice) * kFeatures + feature];
  }
  double& at(std::size_t t, std::size_t slice, std::size_t feature) {
    return values[(t * kSlices + slice) * kFeatures + feature];
  }
  std::size_t size() const { return values.size(); }

  bool operator==(const KpiWindow&) const = default;
};

// Raw (unnormalized) window over stream[start, start + W).
KpiWindow window_at(const Stream& stream, std::size_t start, std::size_t w);

// Per (slice, feature) min-max statistics.
struct NormStats {
  std::array<double, kFeaturesPerTick> min{};
  std::array<double, kFeaturesPerTick> max{};

  bool degenerate(std::size_t f) const { return !(max[f] > min[f]); }
  bool operator==(const NormStats&) const = default;
};

void to_json(nlohmann::json& j, const NormStats& s);
void from_json(const nlohmann::json& j, NormStats& s);

NormStats compute_stats(const std::vector<KpiWindow>& raw);
// (x - min) / (max - min); degenerate features map to 0. No clipping.
KpiWindow normalize(const KpiWindow& raw, const NormStats& stats);
// Inverse of normalize for non-degenerate features (degenerate ones map to min).
KpiWindow denormalize(const KpiWindow& norm, const NormStats& stats);

struct Dataset {
  std::size_t window = 0;
  std::vector<KpiWindow> train;       // normalized
  std::vector<KpiWindow> validation;  // normalized with training stats
  NormStats stats;
  std::vector<std::string> warnings;
};

// Sliding windows (stride 1), seeded 80/20 shuffle split, min-max stats from
// the training split only. Throws InputError if the stream is shorter than W.
Dataset build_dataset(const Stream& stream, std::size_t w, std::uint64_t seed,
                      double train_fraction = 0.8);

// Dataset CSV: tick,slice,throughput_mbps,buffer_bytes,requested_prbs,num_ues
void write_stream_csv(std::ostream& os, const Stream& stream);
Stream read_stream_csv(std::istream& is);  // throws InputError

std::string format_double(double v);

}  // namespace oran_sec::kpi
