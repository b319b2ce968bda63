// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Measurements are printed next to each verdict.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <atomic>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oran_sec/attack.hpp"
#include "oran_sec/error.hpp"
#include "oran_sec/experiment.hpp"
#include "oran_sec/intelligence.hpp"
#include "oran_sec/kpi.hpp"
#include "oran_sec/linkbench.hpp"
#include "oran_sec/metrics.hpp"
#include "oran_sec/parallel.hpp"
#include "oran_sec/rng.hpp"
#include "oran_sec/secchan.hpp"
#include "oran_sec/wire.hpp"

namespace fs = std::filesystem;
using namespace oran_sec;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Verdict()> body;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

double median(std::vector<double> v) { return linkbench::percentile(std::move(v), 50); }

const secchan::Key kKey = secchan::derive_key("acceptance");

experiment::Config default_config() {
  return experiment::load_config(fs::path(ORAN_SEC_SOURCE_DIR) / "config" / "default.json");
}

const fs::path kWork = fs::temp_directory_path() / "oran_sec_acceptance";

// ---------------------------------------------------------------------------

Verdict overhead_calibration() {
  const auto& paper = secchan::shipped_profile("paper-ccm");
  const std::size_t ct62 = secchan::ciphertext_length(62, paper.model);
  bool ok = ct62 == 138;
  std::ostringstream d;
  d << "paper-ccm ct(62)=" << ct62 << "; min overhead:";
  for (const auto& p : secchan::shipped_profiles()) {
    if (p.suite == secchan::Suite::Null) continue;
    std::size_t lo = SIZE_MAX;
    for (std::size_t pt = 1; pt <= 4096; ++pt)
      lo = std::min(lo, secchan::ciphertext_length(pt, p.model) - pt);
    // The sealed record carries body and tag exactly as modeled.
    const auto prof = secchan::make_profile(p.name, kKey);
    secchan::Sealer s(prof, 1);
    const std::size_t body = s.seal(Bytes(62, 0xAB)).ciphertext.size() + p.model.tag;
    ok = ok && lo >= 57 && body + p.model.header == secchan::ciphertext_length(62, p.model);
    d << " " << p.name << "=" << lo;
  }
  return {ok, d.str()};
}

Verdict transmission_delay() {
  const linkbench::LinkParams link{100e6, 500e-6};
  const auto prof = secchan::make_profile("NULL", kKey);
  const std::vector<std::size_t> sizes{64, 256, 1024, 1400};
  const auto res = linkbench::run_echo_bench(sizes, 200, prof, link);
  if (res.partial) return {false, "echo run aborted: " + res.abort_reason};
  std::size_t total = 0, below = 0;
  std::ostringstream d;
  d << "median residual per direction (us):";
  for (const auto& s : res.samples) {
    // NULL adds no bytes, so the frame length is the on-link length.
    const double bound = 2 * link.prop_delay_s + 2 * static_cast<double>(s.payload_bytes) * 8 / link.rate_bps;
    std::vector<double> resid;
    for (double rtt : s.rtts) {
      ++total;
      if (rtt < bound) ++below;
      resid.push_back((rtt - bound) / 2);
    }
    d << " L=" << s.payload_bytes << ":" << fmt(median(resid) * 1e6, 1);
  }
  d << "; " << below << "/" << total << " samples below bound";
  return {below == 0 && total == sizes.size() * 200, d.str()};
}

Verdict channel_contract() {
  Rng rng(20240101);
  std::ostringstream d;
  bool ok = true;
  std::uint32_t spi = 100;
  for (const auto& p : secchan::shipped_profiles()) {
    const auto prof = secchan::make_profile(p.name, kKey);
    const bool authenticated = p.suite != secchan::Suite::Null;

    // Roundtrip of random frames.
    std::size_t rt_ok = 0;
    {
      secchan::Sealer s(prof, ++spi);
      secchan::Opener o(prof, spi);
      for (int i = 0; i < 1000; ++i) {
        wire::E2Frame f;
        std::uint8_t t;
        do t = static_cast<std::uint8_t>(rng.below(256)); while (!wire::is_valid_msg_type(t));
        f.msg_type = static_cast<wire::MsgType>(t);
        f.payload.resize(rng.below(2049));
        for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng.below(256));
        const auto frame = wire::encode_frame(f);
        try {
          const auto pt = o.open_bytes(s.seal(frame).encode());
          const auto back = wire::decode_frame(pt);
          if (back && back->frame == f && back->consumed == pt.size()) ++rt_ok;
        } catch (const Error&) {
        }
      }
    }
    ok = ok && rt_ok == 1000;
    d << p.name << ": roundtrip " << rt_ok << "/1000";
    if (!authenticated) {
      d << " (no integrity); ";
      continue;
    }

    // Every byte position, every substitute value.
    std::size_t tried = 0, rejected = 0;
    {
      secchan::Sealer s(prof, ++spi);
      secchan::Opener o(prof, spi);
      const auto rec = s.seal(wire::encode_frame({wire::kVersion, wire::MsgType::Data, Bytes(90, 7)}));
      const auto enc = rec.encode();
      for (std::size_t i = 0; i < enc.size(); ++i)
        for (int v = 0; v < 256; ++v) {
          if (v == enc[i]) continue;
          ++tried;
          if (attack::try_open(o, attack::tamper_record(enc, i, static_cast<std::uint8_t>(v))) !=
              attack::OpenOutcome::Accepted)
            ++rejected;
        }
      ok = ok && attack::try_open(o, enc) == attack::OpenOutcome::Accepted;
    }
    ok = ok && tried == rejected;

    // Replays of accepted records, unseen records below the window, and
    // shuffled delivery inside 64-record blocks.
    std::size_t replay_rej = 0, stale_rej = 0, reorder_ok = 0;
    {
      secchan::Sealer s(prof, ++spi);
      secchan::Opener o(prof, spi);
      std::vector<secchan::SealedRecord> recs;
      for (int i = 0; i < 640; ++i) recs.push_back(s.seal(Bytes(40, static_cast<std::uint8_t>(i))));
      // One record per block except the last is held back; by the end it
      // sits more than 64 below the highest sequence number.
      auto held = [](std::size_t k) { return k % 64 == 5 && k < 576; };
      for (std::size_t b = 0; b < recs.size(); b += 64) {
        std::vector<std::size_t> idx(64);
        std::iota(idx.begin(), idx.end(), b);
        for (std::size_t k = idx.size() - 1; k > 0; --k) std::swap(idx[k], idx[rng.below(k + 1)]);
        for (std::size_t k : idx)
          if (!held(k) && attack::replay_record(recs[k], o) == attack::OpenOutcome::Accepted)
            ++reorder_ok;
      }
      for (std::size_t k = 0; k < recs.size(); ++k) {
        if (held(k)) {
          if (attack::replay_record(recs[k], o) == attack::OpenOutcome::Replay) ++stale_rej;
        } else if (attack::replay_record(recs[k], o) == attack::OpenOutcome::Replay) {
          ++replay_rej;
        }
      }
    }
    ok = ok && reorder_ok == 631 && replay_rej == 631 && stale_rej == 9;
    d << ", tamper " << rejected << "/" << tried << ", replay " << replay_rej << "/631, stale "
      << stale_rej << "/9, reorder " << reorder_ok << "/631; ";
  }
  return {ok, d.str()};
}

// Unpaced saturation runs, interleaved in rotating order so that host drift
// hits every suite alike.
std::map<std::string, std::vector<double>> saturation_rounds(const std::vector<std::string>& suites,
                                                             int rounds, double seconds) {
  std::map<std::string, std::vector<double>> out;
  for (int r = 0; r < rounds; ++r)
    for (std::size_t k = 0; k < suites.size(); ++k) {
      const auto& name = suites[(k + r) % suites.size()];
      const auto mx = linkbench::run_max_throughput(secchan::make_profile(name, kKey), seconds);
      out[name].push_back(mx.achieved_bps / 1e6);
    }
  return out;
}

std::map<std::string, std::vector<double>> g_sat;

Verdict key_size() {
  const std::vector<std::string> suites{"AES128-CCM", "AES256-CCM", "AES128-CBC-HMAC",
                                        "AES256-CBC-HMAC", "AES256-GCM", "CHACHA20-POLY1305"};
  g_sat = saturation_rounds(suites, 7, 2.0);
  std::ostringstream d;
  bool ok = true;
  for (const auto& [a, b] : {std::pair{"AES128-CCM", "AES256-CCM"},
                             std::pair{"AES128-CBC-HMAC", "AES256-CBC-HMAC"}}) {
    std::vector<double> ratio;
    for (std::size_t r = 0; r < g_sat[a].size(); ++r) ratio.push_back(g_sat[b][r] / g_sat[a][r]);
    const double m = median(ratio);
    ok = ok && std::abs(1 - m) <= 0.10;
    d << a << " " << fmt(median(g_sat[a]), 0) << " vs " << b << " " << fmt(median(g_sat[b]), 0)
      << " Mb/s (paired median ratio " << fmt(m) << ", rounds";
    for (double r : ratio) d << " " << fmt(r, 2);
    d << "); ";
  }
  d << "no AES128 GCM suite is shipped";
  return {ok, d.str()};
}

Verdict suite_ordering() {
  if (g_sat.empty()) return {false, "saturation rounds did not run"};
  const std::vector<std::pair<std::string, double>> order{{"AES256-GCM", 1370},
                                                          {"CHACHA20-POLY1305", 989},
                                                          {"AES256-CCM", 573},
                                                          {"AES256-CBC-HMAC", 505}};
  std::ostringstream d;
  bool ok = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double m = median(g_sat[order[i].first]);
    if (i > 0) ok = ok && median(g_sat[order[i - 1].first]) >= m;
    d << order[i].first << " " << fmt(m, 0) << " Mb/s (reference " << order[i].second << "); ";
  }
  return {ok, d.str()};
}

Verdict cpu_monotonic() {
  const auto prof = secchan::make_profile("AES256-GCM", kKey);
  std::vector<double> rates;
  for (double m : {100, 250, 500, 750, 1000, 1500, 2000, 2500, 3000, 4000, 5000, 6000})
    rates.push_back(m * 1e6);
  linkbench::LinkParams link{linkbench::kUnlimitedRate, 50e-6};
  const auto sweep = linkbench::run_throughput_bench(rates, 2.0, prof, link);
  const auto sat = linkbench::detect_saturation(sweep);
  std::vector<double> x, y;
  std::ostringstream d;
  d << "cpu%:";
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    d << " " << fmt(sweep[i].attempted_bps / 1e6, 0) << "->" << fmt(sweep[i].cpu_pct_mean, 1);
    if (i < sat.knee) {
      x.push_back(sweep[i].attempted_bps / 1e6);
      y.push_back(sweep[i].cpu_pct_mean);
    }
  }
  if (x.size() < 3) return {false, d.str() + "; fewer than 3 points below saturation"};
  const bool mono = linkbench::cpu_non_decreasing(sweep, sat.knee, 0.05);
  const auto fit = linkbench::fit_line(x, y);
  d << "; knee at " << (sat.knee < sweep.size() ? fmt(sweep[sat.knee].attempted_bps / 1e6, 0) : "none")
    << " Mb/s, plateau " << fmt(sat.plateau_bps / 1e6, 0) << " Mb/s, non-decreasing " << mono
    << ", R2 " << fmt(fit.r2);
  return {mono && fit.r2 >= 0.9, d.str()};
}

// Two identical attack-sim runs of the shipped configuration. The first
// one's model also backs the defense criteria.
struct AttackRuns {
  bool done = false;
  experiment::Config cfg;
  fs::path a, b;
  intelligence::Autoencoder ae;
} g_runs;

Verdict determinism() {
  g_runs.cfg = default_config();
  g_runs.a = kWork / "run_a";
  g_runs.b = kWork / "run_b";
  fs::remove_all(kWork);
  experiment::cmd_attack_sim(g_runs.cfg, g_runs.a);
  experiment::cmd_attack_sim(g_runs.cfg, g_runs.b);
  g_runs.ae = intelligence::load_model(g_runs.a / "model.bin");
  g_runs.done = true;
  std::ostringstream d;
  bool ok = true;
  for (const char* f : {"attack_sim.csv", "dataset.csv", "dataset_stats.json", "model.bin",
                        "attack_summary.csv"}) {
    const auto x = slurp(g_runs.a / f), y = slurp(g_runs.b / f);
    const bool same = !x.empty() && x == y;
    ok = ok && same;
    d << f << (same ? " identical" : " DIFFERS") << "; ";
  }
  const auto ha = json::parse(slurp(g_runs.a / "train_report.json"))["model_hash"];
  const auto hb = json::parse(slurp(g_runs.b / "train_report.json"))["model_hash"];
  ok = ok && ha == hb && ha == intelligence::model_hash(g_runs.ae);
  d << "model hash " << ha.get<std::string>().substr(0, 16) << (ha == hb ? " x2" : " MISMATCH");
  return {ok, d.str()};
}

Verdict ae_defense() {
  if (!g_runs.done) return {false, "no trained model"};
  const auto& cfg = g_runs.cfg;
  auto acfg = cfg.attack;
  acfg.sigmas = {0.1, 0.2, 0.5, 1.0};
  acfg.runs = 200;
  acfg.perturbation.mode = attack::NoiseMode::PaperLiteral;
  std::vector<metrics::RunRecord> all;
  bool rates_ok = true;
  std::ostringstream d;
  for (std::uint64_t m = cfg.seed; m < cfg.seed + 5; ++m) {
    const auto recs = metrics::run_attack_experiment(g_runs.ae, cfg.traffic.scenario, acfg, m,
                                                     worker_threads());
    const auto sum = metrics::summarize(recs, m);
    for (std::size_t k = 0; k + 1 < sum.size(); k += 2)
      if (sum[k + 1].deviation_rate_any > sum[k].deviation_rate_any) {
        rates_ok = false;
        d << "seed " << m << " sigma " << sum[k].sigma << ": rate with AE "
          << sum[k + 1].deviation_rate_any << " > " << sum[k].deviation_rate_any << "; ";
      }
    all.insert(all.end(), recs.begin(), recs.end());
  }
  bool dist_ok = true;
  const auto pooled = metrics::summarize(all, cfg.seed);
  for (std::size_t k = 0; k + 1 < pooled.size(); k += 2) {
    const auto& off = pooled[k];
    const auto& on = pooled[k + 1];
    if (off.sigma >= 0.2 && !(on.mean_norm_dist_sched < off.mean_norm_dist_sched &&
                              on.mean_norm_dist_slice < off.mean_norm_dist_slice))
      dist_ok = false;
    d << "sigma " << off.sigma << ": any " << fmt(off.deviation_rate_any) << "->"
      << fmt(on.deviation_rate_any) << ", sched " << fmt(off.mean_norm_dist_sched, 4) << "->"
      << fmt(on.mean_norm_dist_sched, 4) << " (x" << fmt(off.mean_norm_dist_sched / on.mean_norm_dist_sched, 2)
      << "), slice " << fmt(off.mean_norm_dist_slice, 4) << "->" << fmt(on.mean_norm_dist_slice, 4)
      << " (x" << fmt(off.mean_norm_dist_slice / on.mean_norm_dist_slice, 2) << "); ";
  }
  d << "reference factors: sched ~2x, slice >13x; rates " << (rates_ok ? "ok" : "VIOLATED")
    << ", distances " << (dist_ok ? "ok" : "NOT strictly lower at sigma>=0.2");
  return {rates_ok && dist_ok, d.str()};
}

double l2(const kpi::KpiWindow& a, const kpi::KpiWindow& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return std::sqrt(s);
}

Verdict denoising() {
  if (!g_runs.done) return {false, "no trained model"};
  const auto& cfg = g_runs.cfg;
  const auto ds = experiment::training_dataset(cfg, experiment::training_stream(cfg));
  bool ok = true;
  std::ostringstream d;
  d << ds.validation.size() << " validation windows;";
  for (double sigma : {0.2, 0.5, 1.0}) {
    double noisy = 0, cleaned = 0;
    for (std::size_t i = 0; i < ds.validation.size(); ++i) {
      attack::PerturbationSpec spec;
      spec.sigma = sigma;
      spec.mode = attack::NoiseMode::ZeroMean;
      spec.seed = mix_seed(77, i);
      const auto& x = ds.validation[i];
      const auto xt = attack::perturb_window(x, spec);
      noisy += l2(xt, x);
      cleaned += l2(g_runs.ae.reconstruct(xt), x);
    }
    noisy /= ds.validation.size();
    cleaned /= ds.validation.size();
    ok = ok && cleaned < noisy;
    d << " sigma " << sigma << ": " << fmt(noisy) << " -> " << fmt(cleaned) << ";";
  }
  return {ok, d.str()};
}

Verdict gradients() {
  const auto ae = intelligence::Autoencoder::random({120, 32, 8, 32, 120}, 9);
  Rng rng(31);
  double worst = 0;
  for (int b = 0; b < 5; ++b) {
    Eigen::MatrixXd x(120, 32), t(120, 32);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      t.data()[i] = rng.uniform();
      x.data()[i] = t.data()[i] + 0.2 * rng.normal();
    }
    worst = std::max(worst, intelligence::gradient_check(ae, x, t));
  }
  return {worst < 1e-4, "max relative error " + std::to_string(worst) + " over 5 batches"};
}

Verdict action_invariants() {
  const std::size_t n = 1000000;
  const auto ae = intelligence::Autoencoder::random({120, 32, 8, 32, 120}, 5);
  std::atomic<std::size_t> bad{0};
  const std::size_t chunks = 100;
  parallel_for(chunks, worker_threads(), [&](std::size_t c) {
    Rng rng(mix_seed(123, c));
    std::size_t fails = 0;
    kpi::KpiWindow w{10, std::vector<double>(120)};
    for (std::size_t i = c * (n / chunks); i < (c + 1) * (n / chunks); ++i) {
      for (auto& v : w.values) v = -0.5 + 2 * rng.uniform();
      const auto a = intelligence::decide(w, (i % 2) ? &ae : nullptr);
      int sum = 0;
      bool sched_ok = true;
      for (int k = 0; k < 3; ++k) {
        sum += a.slicing[k];
        sched_ok = sched_ok && a.sched[k] >= 0 && a.sched[k] <= 2;
        sched_ok = sched_ok && a.slicing[k] >= 0;
      }
      if (sum != 50 || !sched_ok) ++fails;
    }
    bad += fails;
  });
  return {bad == 0, std::to_string(n - bad) + "/" + std::to_string(n) +
                           " windows valid (half routed through an autoencoder)"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "overhead calibration", 1, overhead_calibration},
      {2, "transmission delay bound", 30, transmission_delay},
      {3, "secured channel contract", 120, channel_contract},
      {4, "key-size indifference", 300, key_size},
      {5, "suite ordering", 600, suite_ordering},
      {6, "cpu monotonicity", 600, cpu_monotonic},
      {10, "determinism", 300, determinism},
      {7, "autoencoder defense", 300, ae_defense},
      {8, "denoising", 60, denoising},
      {9, "gradient correctness", 60, gradients},
      {11, "action-space invariants", 60, action_invariants},
  };
  std::map<int, std::string> lines;
  int failed = 0;
  for (const auto& c : criteria) {
    std::cerr << "running " << c.id << " " << c.name << "...\n";
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.body();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      v.pass = false;
      v.detail += "; over time budget";
    }
    if (!v.pass) ++failed;
    std::ostringstream os;
    os << (v.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " (" << fmt(secs, 2)
       << " s / " << c.budget_s << " s): " << v.detail;
    lines[c.id] = os.str();
    std::cerr << lines[c.id] << "\n";
  }
  for (const auto& [id, line] : lines) std::cout << line << "\n";
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
