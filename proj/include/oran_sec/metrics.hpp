#pragma once

// Deviation of the action taken on perturbed input from the action the
// same agent takes on the clean input, and the sigma-sweep experiment
// that measures it.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"
#include "oran_sec/attack.hpp"
#include "oran_sec/intelligence.hpp"
#include "oran_sec/kpi.hpp"

namespace oran_sec::metrics {

using intelligence::AgentAction;

struct Deviation {
  bool any = false;
  bool sched = false;
  bool slice = false;
};

// Exact component-wise mismatch.
Deviation action_deviation(const AgentAction& intended, const AgentAction& taken);

struct Distance {
  double sched = 0;
  double slice = 0;
};

// Euclidean distance per action subspace divided by its largest attainable
// value: 2 sqrt(3) for scheduling, 50 sqrt(2) for slicing.
Distance normalized_distance(const AgentAction& intended, const AgentAction& taken);

struct RunRecord {
  double sigma = 0;
  attack::NoiseMode mode = attack::NoiseMode::PaperLiteral;
  bool with_ae = false;
  std::size_t run_id = 0;
  Deviation dev;
  Distance dist;
  std::uint64_t seed = 0;
  std::uint64_t master_seed = 0;
};

struct Interval {
  double lo = 0;
  double hi = 0;
};

struct DeviationResult {
  double sigma = 0;
  attack::NoiseMode mode = attack::NoiseMode::PaperLiteral;
  bool with_ae = false;
  std::size_t runs = 0;
  double deviation_rate_any = 0;
  double deviation_rate_sched = 0;
  double deviation_rate_slice = 0;
  double mean_norm_dist_sched = 0;
  double mean_norm_dist_slice = 0;
  // Percentile bootstrap 95% intervals on the three rates.
  Interval ci_any, ci_sched, ci_slice;
};

// Percentile bootstrap of a proportion; deterministic in `seed`.
Interval bootstrap_rate_ci(const std::vector<bool>& hits, std::uint64_t seed,
                           std::size_t resamples = 1000);

// Groups by (sigma, with_ae) in first-seen order of sigma, without-AE first.
std::vector<DeviationResult> summarize(std::span<const RunRecord> records,
                                       std::uint64_t bootstrap_seed = 0);

struct AttackConfig {
  std::vector<double> sigmas{0.1, 0.2, 0.5, 1.0};
  std::size_t runs = 200;
  // sigma and seed are overwritten per run; mode, targets and clamp apply.
  attack::PerturbationSpec perturbation;

  void validate() const;  // throws ConfigError
};

void to_json(nlohmann::json& j, const AttackConfig& c);
void from_json(const nlohmann::json& j, AttackConfig& c);

// seed_run = mix(mix(mix(master, bits(sigma)), arm), run_index), arm 0
// without AE and 1 with.
std::uint64_t run_seed(std::uint64_t master, double sigma, bool with_ae, std::size_t run);

// Every run draws a fresh window of ae.window ticks from the scenario,
// normalizes it with the model's statistics, perturbs it, and compares
// decide() on clean and perturbed input. Records are ordered by
// (sigma, arm, run) regardless of thread count.
std::vector<RunRecord> run_attack_experiment(const intelligence::Autoencoder& ae,
                                             const kpi::Scenario& scenario,
                                             const AttackConfig& config,
                                             std::uint64_t master_seed,
                                             std::size_t threads = 1);

// attack_sim.csv: sigma,mode,with_ae,run_id,deviated_any,deviated_sched,
// deviated_slice,dist_sched,dist_slice,seed
void write_runs_csv(std::ostream& os, std::span<const RunRecord> records);
void write_summary_csv(std::ostream& os, std::span<const DeviationResult> results);

}  // namespace oran_sec::metrics
