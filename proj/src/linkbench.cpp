#include "oran_sec/linkbench.hpp"

#include <time.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

#include "oran_sec/error.hpp"
#include "oran_sec/wire.hpp"

namespace oran_sec::linkbench {

namespace {

constexpr std::uint32_t kSpiUplink = 0xE2000001;
constexpr std::uint32_t kSpiDownlink = 0xE2000002;

// Below this remaining wait the receiver spins (yielding) instead of
// sleeping, so delivery lands close to its scheduled instant.
constexpr auto kSpinWindow = std::chrono::microseconds(200);

Clock::duration to_duration_ceil(double seconds) {
  return std::chrono::ceil<Clock::duration>(std::chrono::duration<double>(seconds));
}

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

double process_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

}  // namespace

void validate(const LinkParams& link) {
  if (!(link.rate_bps > 0)) throw ParameterError("link rate must be > 0");
  if (!(link.prop_delay_s >= 0) || !std::isfinite(link.prop_delay_s)) {
    throw ParameterError("propagation delay must be finite and >= 0");
  }
}

double transmission_delay(double bits, double rate_bps) {
  if (!(rate_bps > 0)) throw ParameterError("transmission rate must be > 0");
  return bits / rate_bps;
}

double processing_delay_estimate(double rtt, double d_prop, double d_trans) {
  return (rtt - 2.0 * d_prop - 2.0 * d_trans) / 2.0;
}

LinkDirection::LinkDirection(LinkParams params, std::size_t capacity, bool precise)
    : params_(params),
      capacity_(std::max<std::size_t>(capacity, 1)),
      spin_(precise ? Clock::duration(kSpinWindow) : Clock::duration::zero()) {
  validate(params_);
}

bool LinkDirection::push(Bytes packet, std::size_t wire_bytes) {
  std::unique_lock lk(mu_);
  if (queue_.size() >= capacity_) {
    // Resume only once the receiver has drained to the low watermark, so a
    // saturated sender and receiver hand over in batches.
    not_full_.wait(lk, [&] { return closed_ || queue_.size() <= capacity_ / 2; });
  }
  if (closed_) return false;
  const auto now = Clock::now();
  auto depart = std::max(now, busy_until_);
  if (std::isfinite(params_.rate_bps)) {
    depart += to_duration_ceil(static_cast<double>(wire_bytes) * 8.0 / params_.rate_bps);
  }
  busy_until_ = depart;
  queue_.push_back({depart + to_duration_ceil(params_.prop_delay_s), std::move(packet)});
  lk.unlock();
  not_empty_.notify_one();
  return true;
}

std::optional<Bytes> LinkDirection::pop(Clock::time_point deadline) {
  std::unique_lock lk(mu_);
  for (;;) {
    const auto now = Clock::now();
    if (!queue_.empty()) {
      const auto at = queue_.front().deliver_at;
      if (now >= at) {
        Bytes out = std::move(queue_.front().bytes);
        queue_.pop_front();
        ++delivered_;
        const bool wake_sender = queue_.size() <= capacity_ / 2;
        lk.unlock();
        if (wake_sender) not_full_.notify_one();
        return out;
      }
      if (now >= deadline) return std::nullopt;
      const auto target = std::min(at, deadline);
      if (target - now > spin_) {
        not_empty_.wait_until(lk, target - spin_);
      } else {
        lk.unlock();
        std::this_thread::yield();
        lk.lock();
      }
      continue;
    }
    if (closed_ || now >= deadline) return std::nullopt;
    if (deadline == Clock::time_point::max()) {
      not_empty_.wait(lk);
    } else {
      not_empty_.wait_until(lk, deadline);
    }
  }
}

void LinkDirection::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  not_empty_.notify_all();
  not_full_.notify_all();
}

std::uint64_t LinkDirection::delivered() const {
  std::lock_guard lk(mu_);
  return delivered_;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

EchoResult run_echo_bench(const std::vector<std::size_t>& sizes, std::size_t reps,
                          const secchan::SecurityProfile& profile, const LinkParams& link,
                          const EchoOptions& opts) {
  if (reps < 30) throw ParameterError("echo bench needs reps >= 30");
  validate(link);
  for (auto s : sizes) {
    if (s < wire::kMinEchoFrameBytes) {
      throw ParameterError("echo size " + std::to_string(s) + " below minimum frame of " +
                           std::to_string(wire::kMinEchoFrameBytes));
    }
  }

  EmulatedLink ln(link, 16);
  secchan::Sealer gnb_tx(profile, kSpiUplink);
  secchan::Opener gnb_rx(profile, kSpiDownlink);
  secchan::Sealer ric_tx(profile, kSpiDownlink);
  secchan::Opener ric_rx(profile, kSpiUplink);
  const auto& model = profile.model;

  std::thread responder([&] {
    while (auto pkt = ln.forward.pop()) {
      try {
        const Bytes pt = ric_rx.open_bytes(*pkt);
        auto d = wire::decode_frame(pt);
        if (!d || d->frame.msg_type != wire::MsgType::Echo) continue;
        const Bytes reply = wire::encode_frame(wire::make_echo_reply(d->frame));
        ln.reverse.push(ric_tx.seal(reply).encode(), on_wire_bytes(reply.size(), model));
      } catch (const Error&) {
        // Rejected records are dropped; the initiator times out.
      }
    }
  });

  EchoResult result;
  std::uint64_t seq = 0;
  const std::size_t warmup = (reps + 8) / 9;
  for (std::size_t size : sizes) {
    DelaySample s;
    s.payload_bytes = size;
    s.wire_bytes = on_wire_bytes(size, model);
    s.d_prop = link.prop_delay_s;
    s.d_trans = std::isfinite(link.rate_bps)
                    ? transmission_delay(static_cast<double>(s.wire_bytes) * 8.0, link.rate_bps)
                    : 0.0;
    for (std::size_t i = 0; i < reps + warmup && !result.partial; ++i) {
      ++seq;
      const auto t0 = Clock::now();
      const auto t0_ns = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t0.time_since_epoch()).count());
      const Bytes frame = wire::encode_frame(wire::make_echo(seq, t0_ns, size));
      ln.forward.push(gnb_tx.seal(frame).encode(), s.wire_bytes);

      auto pkt = ln.reverse.pop(Clock::now() + to_duration_ceil(opts.timeout_s));
      if (!pkt) {
        result.partial = true;
        result.abort_reason = "echo timeout at size " + std::to_string(size);
        break;
      }
      try {
        auto d = wire::decode_frame(gnb_rx.open_bytes(*pkt));
        const auto echo = wire::parse_echo(d.value().frame);
        if (echo.seq_no != seq || echo.send_timestamp_ns != t0_ns) {
          throw ProtocolError("echo reply does not match request");
        }
      } catch (const std::exception& e) {
        result.partial = true;
        result.abort_reason = e.what();
        break;
      }
      const double rtt = seconds_between(t0, Clock::now());
      if (i >= warmup) s.rtts.push_back(rtt);
    }
    s.reps = s.rtts.size();
    if (!s.rtts.empty()) {
      s.rtt_p5 = percentile(s.rtts, 5);
      s.rtt_p50 = percentile(s.rtts, 50);
      s.rtt_p95 = percentile(s.rtts, 95);
      s.d_proc_est = processing_delay_estimate(s.rtt_p50, s.d_prop, s.d_trans);
      result.samples.push_back(std::move(s));
    }
    if (result.partial) break;
  }

  ln.close();
  responder.join();
  return result;
}

namespace {

ThroughputSample run_rate(double attempted_bps, double duration_s,
                          const secchan::SecurityProfile& profile, const LinkParams& link,
                          const ThroughputOptions& opts) {
  if (opts.frame_bytes < wire::kHeaderBytes) throw ParameterError("frame too small");
  // CPU is the measurement here, so the receiver sleeps instead of spinning.
  EmulatedLink ln(link, 256, false);
  secchan::Sealer tx(profile, kSpiUplink);
  secchan::Opener rx(profile, kSpiUplink);

  wire::E2Frame data{wire::kVersion, wire::MsgType::Data, Bytes(opts.frame_bytes - wire::kHeaderBytes)};
  for (std::size_t i = 0; i < data.payload.size(); ++i) data.payload[i] = static_cast<std::uint8_t>(i);
  const Bytes frame = wire::encode_frame(data);
  const std::size_t wire_bytes = on_wire_bytes(frame.size(), profile.model);
  const double frame_bits = static_cast<double>(frame.size()) * 8.0;

  std::atomic<bool> stop{false};
  std::atomic<bool> failed{false};
  const auto start = Clock::now();
  const auto warm_end = start + to_duration_ceil(duration_s * opts.warmup_fraction);
  const auto end = start + to_duration_ceil(duration_s);

  std::uint64_t counted_bytes = 0;
  std::uint64_t counted_frames = 0;
  std::thread receiver([&] {
    while (auto pkt = ln.forward.pop()) {
      try {
        const Bytes pt = rx.open_bytes(*pkt);
        const auto now = Clock::now();
        if (now >= warm_end && now <= end) {
          counted_bytes += pt.size();
          ++counted_frames;
        }
      } catch (const Error&) {
        failed = true;
      }
    }
  });

  std::vector<double> cpu_readings;
  std::thread sampler([&] {
    auto wall = Clock::now();
    double cpu = process_cpu_seconds();
    const auto step = to_duration_ceil(opts.cpu_sample_interval_s);
    auto next = wall + step;
    while (!stop.load()) {
      std::this_thread::sleep_until(next);
      const auto w = Clock::now();
      const double c = process_cpu_seconds();
      if (wall >= warm_end && w <= end + step / 2) {
        cpu_readings.push_back(100.0 * (c - cpu) / seconds_between(wall, w));
      }
      wall = w;
      cpu = c;
      next += step;
    }
  });

  std::thread sender([&] {
    const bool paced = std::isfinite(attempted_bps);
    const auto max_backlog = std::chrono::milliseconds(5);
    auto epoch = Clock::now();
    double sent_bits = 0;
    while (!stop.load(std::memory_order_relaxed)) {
      if (paced) {
        auto due = epoch + to_duration_ceil(sent_bits / attempted_bps);
        const auto now = Clock::now();
        if (due > now) {
          std::this_thread::sleep_until(std::min(due, end));
          continue;
        }
        if (now - due > max_backlog) {
          // Rate not sustainable: drop the accumulated credit.
          epoch = now - max_backlog;
          sent_bits = 0;
        }
      }
      try {
        if (!ln.forward.push(tx.seal(frame).encode(), wire_bytes)) break;
      } catch (const Error&) {
        failed = true;
        break;
      }
      sent_bits += frame_bits;
    }
  });

  std::this_thread::sleep_until(end);
  stop = true;
  ln.close();
  sender.join();
  receiver.join();
  sampler.join();

  ThroughputSample s;
  s.attempted_bps = attempted_bps;
  s.duration_s = duration_s;
  s.frames_delivered = counted_frames;
  s.achieved_bps = static_cast<double>(counted_bytes) * 8.0 / seconds_between(warm_end, end);
  if (!cpu_readings.empty()) {
    double sum = 0;
    for (double c : cpu_readings) sum += c;
    s.cpu_pct_mean = sum / static_cast<double>(cpu_readings.size());
  }
  s.aborted = failed.load();
  return s;
}

}  // namespace

std::vector<ThroughputSample> run_throughput_bench(const std::vector<double>& attempted_bps,
                                                   double duration_s,
                                                   const secchan::SecurityProfile& profile,
                                                   const LinkParams& link,
                                                   const ThroughputOptions& opts) {
  if (!(duration_s >= 1.0)) throw ParameterError("throughput runs need duration >= 1 s");
  validate(link);
  std::vector<ThroughputSample> out;
  out.reserve(attempted_bps.size());
  for (double r : attempted_bps) {
    if (!(r > 0)) throw ParameterError("attempted rate must be > 0");
    out.push_back(run_rate(r, duration_s, profile, link, opts));
  }
  return out;
}

ThroughputSample run_max_throughput(const secchan::SecurityProfile& profile, double duration_s,
                                    const LinkParams& link, const ThroughputOptions& opts) {
  return run_throughput_bench({kUnlimitedRate}, duration_s, profile, link, opts).front();
}

Saturation detect_saturation(const std::vector<ThroughputSample>& sweep, double tolerance) {
  Saturation s;
  s.knee = sweep.size();
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    s.plateau_bps = std::max(s.plateau_bps, sweep[i].achieved_bps);
    if (s.knee == sweep.size() && sweep[i].achieved_bps < (1.0 - tolerance) * sweep[i].attempted_bps) {
      s.knee = i;
    }
  }
  return s;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r2 = syy == 0 ? 1.0 : 1.0 - ss_res / syy;
  return f;
}

bool cpu_non_decreasing(const std::vector<ThroughputSample>& sweep, std::size_t end, double slack) {
  double running_max = 0;
  for (std::size_t i = 0; i < std::min(end, sweep.size()); ++i) {
    if (sweep[i].cpu_pct_mean < (1.0 - slack) * running_max) return false;
    running_max = std::max(running_max, sweep[i].cpu_pct_mean);
  }
  return true;
}

void write_latency_header(std::ostream& os) {
  os << "suite,payload_bytes,reps,rtt_p50_us,rtt_p5_us,rtt_p95_us,d_trans_us,d_prop_us,d_proc_est_us\n";
}

void write_latency_rows(std::ostream& os, const std::string& suite,
                        const std::vector<DelaySample>& samples) {
  const auto us = [](double s) { return s * 1e6; };
  os << std::fixed << std::setprecision(3);
  for (const auto& s : samples) {
    os << suite << ',' << s.payload_bytes << ',' << s.reps << ',' << us(s.rtt_p50) << ','
       << us(s.rtt_p5) << ',' << us(s.rtt_p95) << ',' << us(s.d_trans) << ',' << us(s.d_prop)
       << ',' << us(s.d_proc_est) << '\n';
  }
  os << std::defaultfloat;
}

void write_throughput_header(std::ostream& os) {
  os << "suite,attempted_mbps,achieved_mbps,cpu_pct_mean,duration_s\n";
}

void write_throughput_rows(std::ostream& os, const std::string& suite,
                           const std::vector<ThroughputSample>& samples) {
  os << std::fixed << std::setprecision(3);
  for (const auto& s : samples) {
    os << suite << ',';
    if (std::isfinite(s.attempted_bps)) {
      os << s.attempted_bps / 1e6;
    } else {
      os << "inf";
    }
    os << ',' << s.achieved_bps / 1e6 << ',' << s.cpu_pct_mean << ',' << s.duration_s << '\n';
  }
  os << std::defaultfloat;
}

}  // namespace oran_sec::linkbench
