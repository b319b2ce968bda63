#include "oran_sec/attack.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oran_sec/error.hpp"

namespace oran_sec::attack {

std::string_view mode_name(NoiseMode m) {
  return m == NoiseMode::PaperLiteral ? "PAPER_LITERAL" : "ZERO_MEAN";
}

NoiseMode parse_mode(std::string_view name) {
  if (name == "PAPER_LITERAL") return NoiseMode::PaperLiteral;
  if (name == "ZERO_MEAN") return NoiseMode::ZeroMean;
  throw ConfigError("unknown noise mode '" + std::string(name) + "'");
}

void PerturbationSpec::validate() const {
  if (!(sigma >= 0) || !std::isfinite(sigma))
    throw ConfigError("sigma must be a finite non-negative number");
  for (auto f : target_features)
    if (f >= kpi::kFeaturesPerTick)
      throw ConfigError("target feature index " + std::to_string(f) + " out of range");
}

bool PerturbationSpec::targets(std::size_t feature) const {
  return target_features.empty() ||
         std::find(target_features.begin(), target_features.end(), feature) !=
             target_features.end();
}

void to_json(nlohmann::json& j, const PerturbationSpec& s) {
  auto targets = nlohmann::json::array();
  for (auto f : s.target_features) targets.push_back(kpi::feature_label(f));
  j = {{"sigma", s.sigma},
       {"mode", mode_name(s.mode)},
       {"target_features", targets},
       {"seed", s.seed},
       {"clamp", s.clamp}};
}

void from_json(const nlohmann::json& j, PerturbationSpec& s) {
  s = PerturbationSpec{};
  try {
    if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
    if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("clamp")) s.clamp = j.at("clamp").get<bool>();
    if (j.contains("target_features")) {
      const auto& t = j.at("target_features");
      if (t.is_string() && t.get<std::string>() == "all") {
        s.target_features.clear();
      } else {
        for (const auto& name : t) s.target_features.push_back(kpi::parse_feature_label(name.get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("perturbation: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("perturbation: ") + e.what());
  }
  s.validate();
}

kpi::KpiWindow perturb_window(const kpi::KpiWindow& window, const PerturbationSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x7065727475726250ULL));
  kpi::KpiWindow out = window;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!spec.targets(i % kpi::kFeaturesPerTick)) continue;
    double& x = out.values[i];
    const double clean = x;
    const double mean = spec.mode == NoiseMode::PaperLiteral ? x : 0.0;
    x += rng.normal(mean, spec.sigma);
    if (spec.clamp) x = std::clamp(x, std::min(clean, 0.0), std::max(clean, kClampMax));
  }
  return out;
}

Bytes tamper_record(ByteView encoded, std::size_t byte_index, std::uint8_t new_value) {
  if (byte_index >= encoded.size())
    throw ParameterError("tamper index " + std::to_string(byte_index) + " outside record of " +
                         std::to_string(encoded.size()) + " bytes");
  Bytes out(encoded.begin(), encoded.end());
  out[byte_index] = new_value;
  return out;
}

Bytes tamper_record(const secchan::SealedRecord& record, std::size_t byte_index,
                    std::uint8_t new_value) {
  return tamper_record(record.encode(), byte_index, new_value);
}

std::string_view outcome_name(OpenOutcome o) {
  switch (o) {
    case OpenOutcome::Accepted: return "accepted";
    case OpenOutcome::Replay: return "replay";
    default: return "auth";
  }
}

OpenOutcome try_open(secchan::Opener& opener, ByteView encoded) {
  try {
    opener.open_bytes(encoded);
    return OpenOutcome::Accepted;
  } catch (const ReplayError&) {
    return OpenOutcome::Replay;
  } catch (const AuthError&) {
    return OpenOutcome::Auth;
  }
}

OpenOutcome replay_record(const secchan::SealedRecord& record, secchan::Opener& opener) {
  return try_open(opener, record.encode());
}

ChannelAdversary::ChannelAdversary(std::uint64_t seed, double tamper_rate, double replay_rate)
    : rng_(mix_seed(seed, 0x6164766572736172ULL)),
      tamper_rate_(tamper_rate),
      replay_rate_(replay_rate) {
  if (!(tamper_rate >= 0 && tamper_rate <= 1) || !(replay_rate >= 0 && replay_rate <= 1))
    throw ConfigError("injector rates must lie in [0, 1]");
}

std::vector<Bytes> ChannelAdversary::intercept(Bytes record) {
  std::vector<Bytes> out;
  const bool tamper = rng_.uniform() < tamper_rate_;
  const bool replay = rng_.uniform() < replay_rate_;
  const Bytes previous = last_clean_;
  if (tamper && !record.empty()) {
    const auto idx = rng_.below(record.size());
    const auto mask = static_cast<std::uint8_t>(1 + rng_.below(255));
    record[idx] ^= mask;
    ++tampered_;
  } else {
    last_clean_ = record;
  }
  out.push_back(std::move(record));
  if (replay && !previous.empty()) {
    out.push_back(previous);
    ++replayed_;
  }
  return out;
}

}  // namespace oran_sec::attack
