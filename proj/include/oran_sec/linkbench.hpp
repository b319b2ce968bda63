#pragma once

// Emulated link plus the echo (processing delay) and rate-sweep
// (throughput/CPU) harnesses.
//
// The link serializes every packet at rate R and then holds it for the
// propagation delay, so a packet of L on-wire bits pushed at time t is
// delivered no earlier than  max(t, previous departure) + L/R + d_prop.
// On-wire bits always come from the overhead model (ciphertext_length), so
// PT and CT runs feed the same delay arithmetic.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "oran_sec/bytes.hpp"
#include "oran_sec/secchan.hpp"

namespace oran_sec::linkbench {

using Clock = std::chrono::steady_clock;

inline constexpr double kUnlimitedRate = std::numeric_limits<double>::infinity();

struct LinkParams {
  double rate_bps = kUnlimitedRate;
  double prop_delay_s = 0.0;
};

void validate(const LinkParams& link);  // throws ParameterError

// L / R. Throws ParameterError when R <= 0.
double transmission_delay(double bits, double rate_bps);

// On-wire bytes of a frame of `frame_bytes` under `model`.
inline std::size_t on_wire_bytes(std::size_t frame_bytes, const secchan::OverheadModel& model) {
  return secchan::ciphertext_length(frame_bytes, model);
}

// One direction of the emulated link. Bounded: push blocks while full.
class LinkDirection {
 public:
  // `precise` spins for the last 200 us before a delivery instead of
  // sleeping; it tightens delivery timing at the cost of CPU.
  explicit LinkDirection(LinkParams params, std::size_t capacity = 256, bool precise = true);

  // Returns false if the link was closed.
  bool push(Bytes packet, std::size_t wire_bytes);
  // Waits until the head packet is deliverable or `deadline` passes.
  std::optional<Bytes> pop(Clock::time_point deadline);
  std::optional<Bytes> pop() { return pop(Clock::time_point::max()); }
  void close();

  std::uint64_t delivered() const;

 private:
  struct InFlight {
    Clock::time_point deliver_at;
    Bytes bytes;
  };

  LinkParams params_;
  std::size_t capacity_;
  Clock::duration spin_;
  mutable std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<InFlight> queue_;
  Clock::time_point busy_until_{};
  bool closed_ = false;
  std::uint64_t delivered_ = 0;
};

struct EmulatedLink {
  explicit EmulatedLink(LinkParams p, std::size_t capacity = 256, bool precise = true)
      : params(p), forward(p, capacity, precise), reverse(p, capacity, precise) {}
  LinkParams params;
  LinkDirection forward;  // gNB -> RIC
  LinkDirection reverse;  // RIC -> gNB
  void close() {
    forward.close();
    reverse.close();
  }
};

struct DelaySample {
  std::size_t payload_bytes = 0;  // E2 frame length before sealing
  std::size_t wire_bytes = 0;     // on-wire bytes after sealing
  std::size_t reps = 0;
  double rtt_p5 = 0, rtt_p50 = 0, rtt_p95 = 0;
  double d_trans = 0;     // one-way, seconds
  double d_prop = 0;      // one-way, seconds
  double d_proc_est = 0;  // per direction, from the median RTT
  std::vector<double> rtts;  // post warm-up, seconds
};

struct EchoOptions {
  double timeout_s = 2.0;
};

struct EchoResult {
  std::vector<DelaySample> samples;
  bool partial = false;
  std::string abort_reason;
};

// Ping-pong over the secured channel: one aggregated sample per size.
// Throws ParameterError when reps < 30.
EchoResult run_echo_bench(const std::vector<std::size_t>& sizes, std::size_t reps,
                          const secchan::SecurityProfile& profile, const LinkParams& link,
                          const EchoOptions& opts = {});

// (rtt - 2 d_prop - 2 d_trans) / 2
double processing_delay_estimate(double rtt, double d_prop, double d_trans);

struct ThroughputSample {
  double attempted_bps = 0;  // infinity for max-rate runs
  double achieved_bps = 0;
  double cpu_pct_mean = 0;   // percent of one core
  double duration_s = 0;
  std::uint64_t frames_delivered = 0;
  bool aborted = false;
};

struct ThroughputOptions {
  std::size_t frame_bytes = 1400;
  double cpu_sample_interval_s = 0.1;
  double warmup_fraction = 0.1;
};

// Throws ParameterError when duration < 1 s.
std::vector<ThroughputSample> run_throughput_bench(const std::vector<double>& attempted_bps,
                                                   double duration_s,
                                                   const secchan::SecurityProfile& profile,
                                                   const LinkParams& link,
                                                   const ThroughputOptions& opts = {});

ThroughputSample run_max_throughput(const secchan::SecurityProfile& profile,
                                    double duration_s = 30.0, const LinkParams& link = {},
                                    const ThroughputOptions& opts = {});

struct Saturation {
  double plateau_bps = 0;    // max achieved rate
  std::size_t knee = 0;      // first index with achieved < (1 - tol) * attempted; size() if none
};

Saturation detect_saturation(const std::vector<ThroughputSample>& sweep, double tolerance = 0.05);

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// True when every CPU reading up to `end` is >= (1 - slack) times the
// running maximum before it.
bool cpu_non_decreasing(const std::vector<ThroughputSample>& sweep, std::size_t end,
                        double slack = 0.05);

double percentile(std::vector<double> v, double p);

void write_latency_header(std::ostream& os);
void write_latency_rows(std::ostream& os, const std::string& suite,
                        const std::vector<DelaySample>& samples);
void write_throughput_header(std::ostream& os);
void write_throughput_rows(std::ostream& os, const std::string& suite,
                           const std::vector<ThroughputSample>& samples);

}  // namespace oran_sec::linkbench
