#include "oran_sec/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <set>
#include <thread>

#include "oran_sec/error.hpp"
#include "oran_sec/parallel.hpp"
#include "oran_sec/rng.hpp"
#include "oran_sec/wire.hpp"

namespace oran_sec::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed-splitting labels for the independent random streams of a run.
constexpr std::uint64_t kTrafficStream = 0x7472616666696331ULL;
constexpr std::uint64_t kSplitStream = 0x73706c6974000001ULL;
constexpr std::uint64_t kAeStream = 0x6165000000000001ULL;
constexpr std::uint64_t kE2eStream = 0x6532650000000001ULL;
constexpr std::uint64_t kAdversaryStream = 0x6164760000000001ULL;

constexpr std::uint32_t kIndicationSpi = 0xE2000101;
constexpr std::uint32_t kControlSpi = 0xE2000102;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw Error("cannot write " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void prepare(const Config& cfg, const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory " + out.string() + ": " + ec.message());
  write_json(out / "resolved_config.json", to_json(cfg));
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string> with_null_first(std::vector<std::string> suites) {
  suites.erase(std::remove(suites.begin(), suites.end(), "NULL"), suites.end());
  suites.insert(suites.begin(), "NULL");
  return suites;
}

kpi::KpiWindow window_of(const std::deque<kpi::Tick>& ticks) {
  const kpi::Stream s(ticks.begin(), ticks.end());
  return kpi::window_at(s, 0, s.size());
}

void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

}  // namespace

secchan::Key Config::key() const {
  return key_hex.empty() ? secchan::derive_key(key_label) : secchan::parse_key_hex(key_hex);
}

void Config::validate() const {
  try {
    linkbench::validate(link);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("link: ") + e.what());
  }
  secchan::shipped_profile(profile);
  key();
  for (const auto& s : latency.suites) secchan::shipped_profile(s);
  for (const auto& s : throughput.suites) secchan::shipped_profile(s);
  if (latency.reps < 30) throw ConfigError("latency.reps must be at least 30");
  for (auto sz : latency.sizes)
    if (sz < wire::kMinEchoFrameBytes)
      throw ConfigError("latency.sizes entries must be at least " +
                        std::to_string(wire::kMinEchoFrameBytes));
  if (!(latency.timeout_s > 0)) throw ConfigError("latency.timeout_s must be positive");
  if (throughput.duration_s < 1) throw ConfigError("throughput.duration_s must be at least 1");
  if (throughput.max_duration_s != 0 && throughput.max_duration_s < 1)
    throw ConfigError("throughput.max_duration_s must be 0 or at least 1");
  for (double r : throughput.rates_mbps)
    if (!(r > 0)) throw ConfigError("throughput.rates_mbps entries must be positive");
  if (throughput.frame_bytes < wire::kHeaderBytes)
    throw ConfigError("throughput.frame_bytes is smaller than a frame header");
  if (throughput.rate_cap_bps && !(*throughput.rate_cap_bps > 0))
    throw ConfigError("throughput.rate_cap_bps must be positive");
  if (traffic.window == 0) throw ConfigError("traffic.window must be positive");
  if (traffic.dataset.empty() && traffic.ticks < traffic.window)
    throw ConfigError("traffic.ticks must be at least traffic.window");
  if (!(traffic.train_fraction > 0 && traffic.train_fraction <= 1))
    throw ConfigError("traffic.train_fraction must lie in (0, 1]");
  traffic.scenario.validate();
  ae.validate(traffic.window * kpi::kFeaturesPerTick);
  attack.validate();
  if (attack_master_seeds == 0) throw ConfigError("attack.master_seeds must be positive");
  if (e2e.ticks < traffic.window) throw ConfigError("e2e.ticks must be at least traffic.window");
  if (!(e2e.tamper_rate >= 0 && e2e.tamper_rate <= 1) ||
      !(e2e.replay_rate >= 0 && e2e.replay_rate <= 1))
    throw ConfigError("e2e injector rates must lie in [0, 1]");
  if (e2e.perturbation) e2e.perturbation->validate();
}

Config parse_config(const json& j) {
  Config c;
  check_keys(j, {"schema_version", "seed", "output_dir", "link", "security", "latency",
                 "throughput", "traffic", "ae", "attack", "e2e"},
             "config");
  int version = kSchemaVersion;
  read(j, "schema_version", version, "config");
  if (version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(version));
  read(j, "seed", c.seed, "config");
  read(j, "output_dir", c.output_dir, "config");

  if (j.contains("link")) {
    const auto& l = j["link"];
    check_keys(l, {"rate_bps", "prop_delay_s"}, "link");
    if (l.contains("rate_bps") && l["rate_bps"].is_null())
      c.link.rate_bps = linkbench::kUnlimitedRate;
    else
      read(l, "rate_bps", c.link.rate_bps, "link");
    read(l, "prop_delay_s", c.link.prop_delay_s, "link");
  }
  if (j.contains("security")) {
    const auto& s = j["security"];
    check_keys(s, {"profile", "key_label", "key_hex", "key_sha256"}, "security");
    read(s, "profile", c.profile, "security");
    read(s, "key_label", c.key_label, "security");
    read(s, "key_hex", c.key_hex, "security");
  }
  if (j.contains("latency")) {
    const auto& s = j["latency"];
    check_keys(s, {"suites", "sizes", "reps", "timeout_s"}, "latency");
    read(s, "suites", c.latency.suites, "latency");
    read(s, "sizes", c.latency.sizes, "latency");
    read(s, "reps", c.latency.reps, "latency");
    read(s, "timeout_s", c.latency.timeout_s, "latency");
  }
  if (j.contains("throughput")) {
    const auto& s = j["throughput"];
    check_keys(s, {"suites", "rates_mbps", "duration_s", "max_duration_s", "frame_bytes",
                   "rate_cap_bps"},
               "throughput");
    read(s, "suites", c.throughput.suites, "throughput");
    read(s, "rates_mbps", c.throughput.rates_mbps, "throughput");
    read(s, "duration_s", c.throughput.duration_s, "throughput");
    read(s, "max_duration_s", c.throughput.max_duration_s, "throughput");
    read(s, "frame_bytes", c.throughput.frame_bytes, "throughput");
    if (s.contains("rate_cap_bps") && !s["rate_cap_bps"].is_null()) {
      double v = 0;
      read(s, "rate_cap_bps", v, "throughput");
      c.throughput.rate_cap_bps = v;
    }
  }
  if (j.contains("traffic")) {
    const auto& s = j["traffic"];
    check_keys(s, {"ticks", "window", "train_fraction", "scenario", "dataset"}, "traffic");
    read(s, "ticks", c.traffic.ticks, "traffic");
    read(s, "window", c.traffic.window, "traffic");
    read(s, "train_fraction", c.traffic.train_fraction, "traffic");
    read(s, "dataset", c.traffic.dataset, "traffic");
    if (s.contains("scenario")) read(s, "scenario", c.traffic.scenario, "traffic");
  }
  if (j.contains("ae")) {
    check_keys(j["ae"], {"hidden_dim", "latent_dim", "epochs", "learning_rate", "batch_size",
                         "noise_sigma", "seed"},
               "ae");
    c.ae = j["ae"].get<intelligence::TrainConfig>();
  }
  if (j.contains("attack")) {
    json a = j["attack"];
    check_keys(a, {"sigmas", "runs", "mode", "target_features", "clamp", "master_seeds", "model"},
               "attack");
    read(a, "master_seeds", c.attack_master_seeds, "attack");
    read(a, "model", c.attack_model, "attack");
    a.erase("master_seeds");
    a.erase("model");
    c.attack = a.get<metrics::AttackConfig>();
  }
  if (j.contains("e2e")) {
    const auto& s = j["e2e"];
    check_keys(s, {"ticks", "tamper_rate", "replay_rate", "use_ae", "perturbation"}, "e2e");
    read(s, "ticks", c.e2e.ticks, "e2e");
    read(s, "tamper_rate", c.e2e.tamper_rate, "e2e");
    read(s, "replay_rate", c.e2e.replay_rate, "e2e");
    read(s, "use_ae", c.e2e.use_ae, "e2e");
    if (s.contains("perturbation") && !s["perturbation"].is_null())
      c.e2e.perturbation = s["perturbation"].get<attack::PerturbationSpec>();
  }
  c.validate();
  return c;
}

Config load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const Config& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["link"] = {{"rate_bps", number_or_null(c.link.rate_bps)},
               {"prop_delay_s", c.link.prop_delay_s}};
  j["security"] = {{"profile", c.profile}};
  if (c.key_hex.empty()) {
    j["security"]["key_label"] = c.key_label;
  } else {
    const auto k = c.key();
    j["security"]["key_sha256"] = secchan::sha256_hex(ByteView(k.data(), k.size()));
  }
  j["latency"] = {{"suites", c.latency.suites},
                  {"sizes", c.latency.sizes},
                  {"reps", c.latency.reps},
                  {"timeout_s", c.latency.timeout_s}};
  j["throughput"] = {{"suites", c.throughput.suites},
                     {"rates_mbps", c.throughput.rates_mbps},
                     {"duration_s", c.throughput.duration_s},
                     {"max_duration_s", c.throughput.max_duration_s},
                     {"frame_bytes", c.throughput.frame_bytes},
                     {"rate_cap_bps", c.throughput.rate_cap_bps ? json(*c.throughput.rate_cap_bps)
                                                                : json(nullptr)}};
  j["traffic"] = {{"ticks", c.traffic.ticks},
                  {"window", c.traffic.window},
                  {"train_fraction", c.traffic.train_fraction},
                  {"scenario", c.traffic.scenario},
                  {"dataset", c.traffic.dataset}};
  j["ae"] = c.ae;
  json a = c.attack;
  a["master_seeds"] = c.attack_master_seeds;
  a["model"] = c.attack_model;
  j["attack"] = a;
  j["e2e"] = {{"ticks", c.e2e.ticks},
              {"tamper_rate", c.e2e.tamper_rate},
              {"replay_rate", c.e2e.replay_rate},
              {"use_ae", c.e2e.use_ae},
              {"perturbation", c.e2e.perturbation ? json(*c.e2e.perturbation) : json(nullptr)}};
  return j;
}

Bytes encode_indication(const kpi::Tick& tick) {
  Bytes out;
  out.reserve(kIndicationBytes);
  put_u64(out, tick.timestamp);
  for (const auto& r : tick.reports) {
    out.push_back(static_cast<std::uint8_t>(r.slice));
    put_f64(out, r.throughput_mbps);
    put_f64(out, r.buffer_bytes);
    put_f64(out, r.requested_prbs);
    put_u32(out, r.num_ues);
  }
  return out;
}

kpi::Tick decode_indication(ByteView p) {
  if (p.size() != kIndicationBytes)
    throw ProtocolError("indication payload must be " + std::to_string(kIndicationBytes) +
                        " bytes, got " + std::to_string(p.size()));
  kpi::Tick t;
  t.timestamp = get_u64(p.data() + 0);
  std::size_t off = 8;
  for (std::size_t s = 0; s < kpi::kSlices; ++s) {
    auto& r = t.reports[s];
    if (p[off] != s) throw ProtocolError("indication slices out of order");
    r.slice = static_cast<kpi::Slice>(p[off]);
    r.throughput_mbps = std::bit_cast<double>(get_u64(p.data() + off + 1));
    r.buffer_bytes = std::bit_cast<double>(get_u64(p.data() + off + 9));
    r.requested_prbs = std::bit_cast<double>(get_u64(p.data() + off + 17));
    r.num_ues = get_u32(p.data() + off + 25);
    r.timestamp = t.timestamp;
    off += 29;
  }
  return t;
}

Bytes encode_control(std::uint64_t tick, const intelligence::AgentAction& a) {
  Bytes out;
  out.reserve(kControlBytes);
  put_u64(out, tick);
  for (int s : a.sched) out.push_back(static_cast<std::uint8_t>(s));
  for (int prb : a.slicing) put_u16(out, static_cast<std::uint16_t>(prb));
  return out;
}

std::pair<std::uint64_t, intelligence::AgentAction> decode_control(ByteView p) {
  if (p.size() != kControlBytes) throw ProtocolError("control payload has the wrong size");
  intelligence::AgentAction a;
  int sum = 0;
  for (std::size_t s = 0; s < kpi::kSlices; ++s) {
    a.sched[s] = p[8 + s];
    if (a.sched[s] > 2) throw ProtocolError("scheduling policy out of range");
    a.slicing[s] = get_u16(p.data() + 11 + 2 * s);
    sum += a.slicing[s];
  }
  if (sum != intelligence::kTotalPrbs) throw ProtocolError("slicing does not sum to 50 PRBs");
  return {get_u64(p.data() + 0), a};
}

void to_json(json& j, const E2eCounters& c) {
  j = {{"indications_sent", c.indications_sent},
       {"frames_on_link", c.frames_on_link},
       {"frames_opened", c.frames_opened},
       {"rejected_auth", c.rejected_auth},
       {"rejected_replay", c.rejected_replay},
       {"rejected_total", c.rejected_auth + c.rejected_replay},
       {"tampered_injected", c.tampered_injected},
       {"replayed_injected", c.replayed_injected},
       {"indications_decoded", c.indications_decoded},
       {"actions_taken", c.actions_taken},
       {"controls_received", c.controls_received}};
}

E2eResult run_e2e(const Config& cfg, const intelligence::Autoencoder* ae,
                  const kpi::NormStats& stats) {
  const auto key = cfg.key();
  const auto prof = secchan::make_profile(cfg.profile, key);
  const std::size_t w = cfg.traffic.window;
  if (ae && ae->input_dim() != w * kpi::kFeaturesPerTick)
    throw ConfigError("autoencoder input does not match traffic.window");

  E2eResult res;
  res.stream = kpi::generate_traffic(mix_seed(cfg.seed, kE2eStream), cfg.e2e.ticks,
                                     cfg.traffic.scenario);
  linkbench::EmulatedLink link(cfg.link);
  E2eCounters& c = res.counters;
  std::exception_ptr gnb_error, ric_error, ctl_error;

  std::thread gnb([&] {
    try {
      secchan::Sealer tx(prof, kIndicationSpi);
      attack::ChannelAdversary adv(mix_seed(cfg.seed, kAdversaryStream), cfg.e2e.tamper_rate,
                                   cfg.e2e.replay_rate);
      for (const auto& tick : res.stream) {
        const Bytes frame = wire::encode_frame({wire::kVersion, wire::MsgType::Indication,
                                                encode_indication(tick)});
        const std::size_t wire_bytes = linkbench::on_wire_bytes(frame.size(), prof.model);
        ++c.indications_sent;
        for (auto& b : adv.intercept(tx.seal(frame).encode())) {
          ++c.frames_on_link;
          if (!link.forward.push(std::move(b), wire_bytes)) break;
        }
      }
      c.tampered_injected = adv.tampered();
      c.replayed_injected = adv.replayed();
    } catch (...) {
      gnb_error = std::current_exception();
    }
    link.forward.close();
  });

  std::thread ctl([&] {
    try {
      secchan::Opener rx(prof, kControlSpi);
      while (auto b = link.reverse.pop()) {
        const Bytes frame = rx.open_bytes(*b);
        const auto dec = wire::decode_frame(frame);
        if (!dec || dec->frame.msg_type != wire::MsgType::Control)
          throw ProtocolError("gNB received a non-control frame");
        decode_control(dec->frame.payload);
        ++c.controls_received;
      }
    } catch (...) {
      ctl_error = std::current_exception();
    }
  });

  try {
    secchan::Opener rx(prof, kIndicationSpi);
    secchan::Sealer tx(prof, kControlSpi);
    std::deque<kpi::Tick> recent;
    while (auto b = link.forward.pop()) {
      Bytes frame;
      try {
        frame = rx.open_bytes(*b);
      } catch (const ReplayError&) {
        ++c.rejected_replay;
        continue;
      } catch (const AuthError&) {
        ++c.rejected_auth;
        continue;
      }
      ++c.frames_opened;
      const auto dec = wire::decode_frame(frame);
      if (!dec || dec->frame.msg_type != wire::MsgType::Indication)
        throw ProtocolError("RIC received a non-indication frame");
      recent.push_back(decode_indication(dec->frame.payload));
      ++c.indications_decoded;
      if (recent.size() > w) recent.pop_front();
      if (recent.size() < w) continue;

      auto win = kpi::normalize(window_of(recent), stats);
      if (cfg.e2e.perturbation) {
        auto spec = *cfg.e2e.perturbation;
        spec.seed = mix_seed(spec.seed ^ cfg.seed, recent.back().timestamp);
        win = attack::perturb_window(win, spec);
      }
      const auto action = intelligence::decide(win, ae);
      const std::uint64_t at = recent.back().timestamp;
      res.actions.emplace_back(at, action);
      ++c.actions_taken;
      const Bytes out =
          wire::encode_frame({wire::kVersion, wire::MsgType::Control, encode_control(at, action)});
      link.reverse.push(tx.seal(out).encode(), linkbench::on_wire_bytes(out.size(), prof.model));
    }
  } catch (...) {
    ric_error = std::current_exception();
    link.forward.close();
    // Drain so a blocked gNB push can finish.
    while (link.forward.pop(linkbench::Clock::now())) {
    }
  }
  link.reverse.close();
  gnb.join();
  ctl.join();
  for (auto e : {ric_error, gnb_error, ctl_error})
    if (e) std::rethrow_exception(e);
  return res;
}

std::vector<std::pair<std::uint64_t, intelligence::AgentAction>> offline_actions(
    const kpi::Stream& stream, std::size_t window, const kpi::NormStats& stats,
    const intelligence::Autoencoder* ae) {
  std::vector<std::pair<std::uint64_t, intelligence::AgentAction>> out;
  for (std::size_t end = window; end <= stream.size(); ++end) {
    const auto win = kpi::normalize(kpi::window_at(stream, end - window, window), stats);
    out.emplace_back(stream[end - 1].timestamp, intelligence::decide(win, ae));
  }
  return out;
}

void cmd_bench_latency(const Config& cfg, const fs::path& out) {
  prepare(cfg, out);
  const auto key = cfg.key();
  std::ofstream csv(out / "latency.csv");
  linkbench::write_latency_header(csv);
  json summary = json::object();
  std::map<std::size_t, double> pt_proc;
  std::string failure;
  for (const auto& suite : with_null_first(cfg.latency.suites)) {
    const auto prof = secchan::make_profile(suite, key);
    const auto r = linkbench::run_echo_bench(cfg.latency.sizes, cfg.latency.reps, prof, cfg.link,
                                             {cfg.latency.timeout_s});
    linkbench::write_latency_rows(csv, suite, r.samples);
    csv.flush();
    for (const auto& s : r.samples) {
      if (suite == "NULL") pt_proc[s.payload_bytes] = s.d_proc_est;
      json row = {{"payload_bytes", s.payload_bytes},
                  {"wire_bytes", s.wire_bytes},
                  {"rtt_p50_us", s.rtt_p50 * 1e6},
                  {"d_proc_est_us", s.d_proc_est * 1e6}};
      if (pt_proc.count(s.payload_bytes))
        row["d_proc_minus_pt_us"] = (s.d_proc_est - pt_proc[s.payload_bytes]) * 1e6;
      summary[suite].push_back(row);
    }
    std::cerr << "latency " << suite << ": " << r.samples.size() << " sizes\n";
    if (r.partial) {
      failure = suite + ": " + r.abort_reason;
      break;
    }
  }
  write_json(out / "latency_summary.json", summary);
  if (!failure.empty()) throw Error("echo benchmark aborted (" + failure + ")");
}

void cmd_bench_throughput(const Config& cfg, const fs::path& out) {
  prepare(cfg, out);
  const auto key = cfg.key();
  linkbench::LinkParams link{cfg.throughput.rate_cap_bps.value_or(linkbench::kUnlimitedRate),
                             cfg.link.prop_delay_s};
  linkbench::ThroughputOptions opts;
  opts.frame_bytes = cfg.throughput.frame_bytes;
  std::vector<double> attempted;
  for (double m : cfg.throughput.rates_mbps) attempted.push_back(m * 1e6);

  std::ofstream csv(out / "throughput.csv");
  linkbench::write_throughput_header(csv);
  json summary = json::object();
  for (const auto& suite : cfg.throughput.suites) {
    const auto prof = secchan::make_profile(suite, key);
    auto sweep = linkbench::run_throughput_bench(attempted, cfg.throughput.duration_s, prof, link,
                                                 opts);
    linkbench::write_throughput_rows(csv, suite, sweep);
    const auto sat = linkbench::detect_saturation(sweep);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < sat.knee; ++i) {
      x.push_back(sweep[i].attempted_bps / 1e6);
      y.push_back(sweep[i].cpu_pct_mean);
    }
    json s = {{"plateau_mbps", sat.plateau_bps / 1e6},
              {"knee_attempted_mbps",
               sat.knee < sweep.size() ? json(sweep[sat.knee].attempted_bps / 1e6) : json(nullptr)},
              {"cpu_non_decreasing_below_knee", linkbench::cpu_non_decreasing(sweep, sat.knee)}};
    if (x.size() >= 2) {
      const auto fit = linkbench::fit_line(x, y);
      s["cpu_fit"] = {{"slope_pct_per_mbps", fit.slope}, {"intercept_pct", fit.intercept},
                      {"r2", fit.r2}};
    }
    if (cfg.throughput.max_duration_s > 0) {
      const auto mx = linkbench::run_max_throughput(prof, cfg.throughput.max_duration_s, link, opts);
      linkbench::write_throughput_rows(csv, suite, {mx});
      s["max_mbps"] = mx.achieved_bps / 1e6;
      s["max_cpu_pct"] = mx.cpu_pct_mean;
    }
    csv.flush();
    summary[suite] = s;
    std::cerr << "throughput " << suite << ": plateau " << sat.plateau_bps / 1e6 << " Mb/s\n";
  }
  write_json(out / "throughput_summary.json", summary);
}

kpi::Stream training_stream(const Config& cfg) {
  if (cfg.traffic.dataset.empty())
    return kpi::generate_traffic(mix_seed(cfg.seed, kTrafficStream), cfg.traffic.ticks,
                                 cfg.traffic.scenario);
  std::ifstream f(cfg.traffic.dataset);
  if (!f) throw ConfigError("cannot open dataset " + cfg.traffic.dataset);
  kpi::Stream stream;
  try {
    stream = kpi::read_stream_csv(f);
  } catch (const InputError& e) {
    throw ConfigError("dataset " + cfg.traffic.dataset + ": " + e.what());
  }
  if (stream.size() < cfg.traffic.window)
    throw ConfigError("dataset " + cfg.traffic.dataset + " is shorter than traffic.window");
  return stream;
}

kpi::Dataset training_dataset(const Config& cfg, const kpi::Stream& stream) {
  return kpi::build_dataset(stream, cfg.traffic.window, mix_seed(cfg.seed, kSplitStream),
                            cfg.traffic.train_fraction);
}

intelligence::Autoencoder cmd_train_ae(const Config& cfg, const fs::path& out) {
  prepare(cfg, out);
  const auto stream = training_stream(cfg);
  const auto ds = training_dataset(cfg, stream);
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";

  std::ofstream csv(out / "dataset.csv", std::ios::binary);
  kpi::write_stream_csv(csv, stream);
  csv.close();
  write_json(out / "dataset_stats.json",
             {{"norm_stats", ds.stats},
              {"window", ds.window},
              {"train_fraction", cfg.traffic.train_fraction},
              {"train_windows", ds.train.size()},
              {"validation_windows", ds.validation.size()},
              {"generator",
               {{"source", cfg.traffic.dataset.empty() ? "generated" : cfg.traffic.dataset},
                {"seed", mix_seed(cfg.seed, kTrafficStream)},
                {"ticks", stream.size()},
                {"scenario", cfg.traffic.scenario}}},
              {"warnings", ds.warnings}});

  auto tc = cfg.ae;
  tc.seed = mix_seed(mix_seed(cfg.seed, kAeStream), cfg.ae.seed);
  intelligence::TrainReport rep;
  auto ae = intelligence::train_autoencoder(ds, tc, &rep);
  intelligence::save_model(ae, out / "model.bin");
  json report = rep;
  report["model_hash"] = intelligence::model_hash(ae);
  report["dims"] = ae.dims();
  report["warnings"] = ds.warnings;
  write_json(out / "train_report.json", report);
  std::cerr << "train-ae: val mse " << rep.val_mse << " (mean predictor "
            << rep.baseline_val_mse << ")\n";
  return ae;
}

void cmd_attack_sim(const Config& cfg, const fs::path& out) {
  intelligence::Autoencoder ae;
  if (!cfg.attack_model.empty()) {
    prepare(cfg, out);
    try {
      ae = intelligence::load_model(cfg.attack_model);
    } catch (const InputError& e) {
      throw ConfigError("model " + cfg.attack_model + ": " + e.what());
    }
  } else {
    ae = cmd_train_ae(cfg, out);
  }

  const std::size_t threads = worker_threads();
  std::vector<metrics::RunRecord> all;
  std::ofstream by_seed(out / "attack_summary_by_seed.csv");
  by_seed << "master_seed,";
  {
    std::ostringstream hdr;
    metrics::write_summary_csv(hdr, {});
    by_seed << hdr.str();
  }
  for (std::size_t i = 0; i < cfg.attack_master_seeds; ++i) {
    const std::uint64_t master = cfg.seed + i;
    auto recs = metrics::run_attack_experiment(ae, cfg.traffic.scenario, cfg.attack, master,
                                               threads);
    std::ostringstream rows;
    metrics::write_summary_csv(rows, metrics::summarize(recs, master));
    std::string line;
    std::istringstream in(rows.str());
    std::getline(in, line);
    while (std::getline(in, line)) by_seed << master << ',' << line << '\n';
    all.insert(all.end(), recs.begin(), recs.end());
  }
  by_seed.close();

  std::ofstream runs(out / "attack_sim.csv", std::ios::binary);
  metrics::write_runs_csv(runs, all);
  const auto summary = metrics::summarize(all, cfg.seed);
  std::ofstream sum(out / "attack_summary.csv", std::ios::binary);
  metrics::write_summary_csv(sum, summary);

  json report = json::array();
  for (std::size_t k = 0; k + 1 < summary.size(); k += 2) {
    const auto& off = summary[k];
    const auto& on = summary[k + 1];
    auto factor = [](double without, double with) {
      return with > 0 ? json(without / with) : json(nullptr);
    };
    report.push_back({{"sigma", off.sigma},
                      {"deviation_rate_any", {{"without_ae", off.deviation_rate_any},
                                              {"with_ae", on.deviation_rate_any}}},
                      {"mean_norm_dist_sched", {{"without_ae", off.mean_norm_dist_sched},
                                                {"with_ae", on.mean_norm_dist_sched}}},
                      {"mean_norm_dist_slice", {{"without_ae", off.mean_norm_dist_slice},
                                                {"with_ae", on.mean_norm_dist_slice}}},
                      {"dist_reduction_sched", factor(off.mean_norm_dist_sched, on.mean_norm_dist_sched)},
                      {"dist_reduction_slice", factor(off.mean_norm_dist_slice, on.mean_norm_dist_slice)}});
  }
  write_json(out / "attack_report.json",
             {{"mode", attack::mode_name(cfg.attack.perturbation.mode)},
              {"runs_per_arm", cfg.attack.runs},
              {"master_seeds", cfg.attack_master_seeds},
              {"model_hash", intelligence::model_hash(ae)},
              {"sigmas", report}});
}

void cmd_e2e(const Config& cfg, const fs::path& out) {
  intelligence::Autoencoder ae;
  kpi::NormStats stats;
  if (cfg.e2e.use_ae) {
    if (!cfg.attack_model.empty()) {
      prepare(cfg, out);
      try {
        ae = intelligence::load_model(cfg.attack_model);
      } catch (const InputError& e) {
        throw ConfigError("model " + cfg.attack_model + ": " + e.what());
      }
    } else {
      ae = cmd_train_ae(cfg, out);
    }
    stats = ae.stats;
  } else {
    prepare(cfg, out);
    stats = training_dataset(cfg, training_stream(cfg)).stats;
  }
  const auto res = run_e2e(cfg, cfg.e2e.use_ae ? &ae : nullptr, stats);
  json counters = res.counters;
  counters["profile"] = cfg.profile;
  counters["use_ae"] = cfg.e2e.use_ae;
  write_json(out / "e2e_counters.json", counters);
  std::ofstream csv(out / "e2e_actions.csv", std::ios::binary);
  csv << "tick,sched_embb,sched_urllc,sched_mmtc,prb_embb,prb_urllc,prb_mmtc\n";
  for (const auto& [t, a] : res.actions) {
    csv << t;
    for (int s : a.sched) csv << ',' << s;
    for (int p : a.slicing) csv << ',' << p;
    csv << '\n';
  }
}

}  // namespace oran_sec::experiment
