#include "oran_sec/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <ostream>

#include "oran_sec/error.hpp"
#include "oran_sec/parallel.hpp"
#include "oran_sec/rng.hpp"

namespace oran_sec::metrics {

Deviation action_deviation(const AgentAction& intended, const AgentAction& taken) {
  Deviation d;
  d.sched = intended.sched != taken.sched;
  d.slice = intended.slicing != taken.slicing;
  d.any = d.sched || d.slice;
  return d;
}

Distance normalized_distance(const AgentAction& intended, const AgentAction& taken) {
  double s = 0, l = 0;
  for (std::size_t i = 0; i < kpi::kSlices; ++i) {
    const double ds = intended.sched[i] - taken.sched[i];
    const double dl = intended.slicing[i] - taken.slicing[i];
    s += ds * ds;
    l += dl * dl;
  }
  return {std::sqrt(s) / (2 * std::sqrt(3.0)),
          std::sqrt(l) / (intelligence::kTotalPrbs * std::sqrt(2.0))};
}

Interval bootstrap_rate_ci(const std::vector<bool>& hits, std::uint64_t seed,
                           std::size_t resamples) {
  if (hits.empty()) return {};
  Rng rng(seed);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) k += hits[rng.below(hits.size())];
    m = static_cast<double>(k) / static_cast<double>(hits.size());
  }
  std::sort(means.begin(), means.end());
  auto q = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::floor(p * static_cast<double>(resamples - 1)));
    return means[idx];
  };
  return {q(0.025), q(0.975)};
}

std::vector<DeviationResult> summarize(std::span<const RunRecord> records,
                                       std::uint64_t bootstrap_seed) {
  std::vector<double> sigmas;
  for (const auto& r : records)
    if (std::find(sigmas.begin(), sigmas.end(), r.sigma) == sigmas.end()) sigmas.push_back(r.sigma);
  std::vector<DeviationResult> out;
  for (double sigma : sigmas) {
    for (bool with_ae : {false, true}) {
      DeviationResult d;
      d.sigma = sigma;
      d.with_ae = with_ae;
      std::vector<bool> any, sched, slice;
      for (const auto& r : records) {
        if (r.sigma != sigma || r.with_ae != with_ae) continue;
        d.mode = r.mode;
        any.push_back(r.dev.any);
        sched.push_back(r.dev.sched);
        slice.push_back(r.dev.slice);
        d.mean_norm_dist_sched += r.dist.sched;
        d.mean_norm_dist_slice += r.dist.slice;
      }
      if (any.empty()) continue;
      d.runs = any.size();
      const double n = static_cast<double>(d.runs);
      d.deviation_rate_any = static_cast<double>(std::count(any.begin(), any.end(), true)) / n;
      d.deviation_rate_sched = static_cast<double>(std::count(sched.begin(), sched.end(), true)) / n;
      d.deviation_rate_slice = static_cast<double>(std::count(slice.begin(), slice.end(), true)) / n;
      d.mean_norm_dist_sched /= n;
      d.mean_norm_dist_slice /= n;
      const std::uint64_t s = run_seed(bootstrap_seed, sigma, with_ae, 0);
      d.ci_any = bootstrap_rate_ci(any, mix_seed(s, 1));
      d.ci_sched = bootstrap_rate_ci(sched, mix_seed(s, 2));
      d.ci_slice = bootstrap_rate_ci(slice, mix_seed(s, 3));
      out.push_back(d);
    }
  }
  return out;
}

void AttackConfig::validate() const {
  if (sigmas.empty()) throw ConfigError("attack: sigma sweep is empty");
  for (double s : sigmas)
    if (!(s >= 0) || !std::isfinite(s)) throw ConfigError("attack: sigma must be non-negative");
  if (runs == 0) throw ConfigError("attack: runs must be positive");
  perturbation.validate();
}

void to_json(nlohmann::json& j, const AttackConfig& c) {
  j = c.perturbation;
  j.erase("sigma");
  j.erase("seed");
  j["sigmas"] = c.sigmas;
  j["runs"] = c.runs;
}

void from_json(const nlohmann::json& j, AttackConfig& c) {
  c = AttackConfig{};
  try {
    if (j.contains("sigmas")) c.sigmas = j.at("sigmas").get<std::vector<double>>();
    if (j.contains("runs")) c.runs = j.at("runs").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("attack: ") + e.what());
  }
  c.perturbation = j.get<attack::PerturbationSpec>();
  c.validate();
}

std::uint64_t run_seed(std::uint64_t master, double sigma, bool with_ae, std::size_t run) {
  return mix_seed(mix_seed(mix_seed(master, std::bit_cast<std::uint64_t>(sigma)), with_ae ? 1 : 0),
                  run);
}

std::vector<RunRecord> run_attack_experiment(const intelligence::Autoencoder& ae,
                                             const kpi::Scenario& scenario,
                                             const AttackConfig& config,
                                             std::uint64_t master_seed, std::size_t threads) {
  config.validate();
  scenario.validate();
  if (ae.window == 0 || ae.window * kpi::kFeaturesPerTick != ae.input_dim())
    throw ConfigError("autoencoder model does not record a usable window length");

  const std::size_t per_arm = config.runs;
  const std::size_t n = config.sigmas.size() * 2 * per_arm;
  std::vector<RunRecord> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const double sigma = config.sigmas[i / (2 * per_arm)];
    const bool with_ae = (i / per_arm) % 2 == 1;
    const std::size_t run = i % per_arm;
    RunRecord& r = out[i];
    r.sigma = sigma;
    r.mode = config.perturbation.mode;
    r.with_ae = with_ae;
    r.run_id = run;
    r.seed = run_seed(master_seed, sigma, with_ae, run);
    r.master_seed = master_seed;

    const auto stream = kpi::generate_traffic(mix_seed(r.seed, 1), ae.window, scenario);
    const auto clean = kpi::normalize(kpi::window_at(stream, 0, ae.window), ae.stats);
    attack::PerturbationSpec spec = config.perturbation;
    spec.sigma = sigma;
    spec.seed = mix_seed(r.seed, 2);
    const auto dirty = attack::perturb_window(clean, spec);
    const intelligence::Autoencoder* arm = with_ae ? &ae : nullptr;
    const auto intended = intelligence::decide(clean, arm);
    const auto taken = intelligence::decide(dirty, arm);
    r.dev = action_deviation(intended, taken);
    r.dist = normalized_distance(intended, taken);
  });
  return out;
}

void write_runs_csv(std::ostream& os, std::span<const RunRecord> records) {
  os << "sigma,mode,with_ae,run_id,deviated_any,deviated_sched,deviated_slice,dist_sched,"
        "dist_slice,seed\n";
  for (const auto& r : records) {
    os << kpi::format_double(r.sigma) << ',' << attack::mode_name(r.mode) << ','
       << (r.with_ae ? 1 : 0) << ',' << r.run_id << ',' << r.dev.any << ',' << r.dev.sched << ','
       << r.dev.slice << ',' << kpi::format_double(r.dist.sched) << ','
       << kpi::format_double(r.dist.slice) << ',' << r.seed << '\n';
  }
}

void write_summary_csv(std::ostream& os, std::span<const DeviationResult> results) {
  os << "sigma,mode,with_ae,runs,deviation_rate_any,deviation_rate_sched,deviation_rate_slice,"
        "mean_norm_dist_sched,mean_norm_dist_slice,ci_any_lo,ci_any_hi,ci_sched_lo,ci_sched_hi,"
        "ci_slice_lo,ci_slice_hi\n";
  auto f = kpi::format_double;
  for (const auto& d : results) {
    os << f(d.sigma) << ',' << attack::mode_name(d.mode) << ',' << (d.with_ae ? 1 : 0) << ','
       << d.runs << ',' << f(d.deviation_rate_any) << ',' << f(d.deviation_rate_sched) << ','
       << f(d.deviation_rate_slice) << ',' << f(d.mean_norm_dist_sched) << ','
       << f(d.mean_norm_dist_slice) << ',' << f(d.ci_any.lo) << ',' << f(d.ci_any.hi) << ','
       << f(d.ci_sched.lo) << ',' << f(d.ci_sched.hi) << ',' << f(d.ci_slice.lo) << ','
       << f(d.ci_slice.hi) << '\n';
  }
}

}  // namespace oran_sec::metrics
