#include "oran_sec/kpi.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "oran_sec/error.hpp"
#include "oran_sec/rng.hpp"

namespace oran_sec::kpi {

namespace {

constexpr std::string_view kSliceNames[kSlices] = {"eMBB", "URLLC", "mMTC"};
constexpr std::string_view kFeatureNames[kFeatures] = {"throughput_mbps", "buffer_bytes",
                                                        "requested_prbs", "num_ues"};

double feature_of(const KpiReport& r, std::size_t f) {
  switch (f) {
    case kThroughput: return r.throughput_mbps;
    case kBuffer: return r.buffer_bytes;
    case kRequestedPrbs: return r.requested_prbs;
    default: return static_cast<double>(r.num_ues);
  }
}

}  // namespace

std::string_view slice_name(Slice s) { return kSliceNames[static_cast<std::size_t>(s)]; }

Slice parse_slice(std::string_view name) {
  for (std::size_t i = 0; i < kSlices; ++i)
    if (kSliceNames[i] == name) return static_cast<Slice>(i);
  throw InputError("unknown slice '" + std::string(name) + "'");
}

std::string feature_label(std::size_t index) {
  return std::string(kSliceNames[index / kFeatures]) + "." +
         std::string(kFeatureNames[index % kFeatures]);
}

std::size_t parse_feature_label(std::string_view label) {
  for (std::size_t i = 0; i < kFeaturesPerTick; ++i)
    if (feature_label(i) == label) return i;
  throw InputError("unknown feature '" + std::string(label) + "'");
}

Scenario Scenario::default_scenario() {
  Scenario s;
  // {throughput Mb/s, buffer bytes, requested PRBs, UEs}
  s.slices[0].features = {{{40, 8}, {20000, 4000}, {25, 5}, {10, 2}}};
  s.slices[1].features = {{{5, 1}, {1000, 300}, {10, 3}, {5, 1}}};
  s.slices[2].features = {{{1, 0.3}, {5000, 1500}, {8, 2}, {40, 8}}};
  s.phi = 0.8;
  return s;
}

void Scenario::validate() const {
  if (!(phi >= 0.0 && phi < 1.0)) throw ConfigError("scenario phi must lie in [0, 1)");
  for (std::size_t s = 0; s < kSlices; ++s) {
    for (std::size_t f = 0; f < kFeatures; ++f) {
      const auto& p = slices[s].features[f];
      const std::string where = std::string(kSliceNames[s]) + "." + std::string(kFeatureNames[f]);
      if (!std::isfinite(p.mean) || p.mean < 0) throw ConfigError(where + ": mean must be >= 0");
      if (!std::isfinite(p.stddev) || p.stddev < 0) {
        throw ConfigError(where + ": stddev must be >= 0");
      }
    }
  }
}

void to_json(nlohmann::json& j, const Scenario& s) {
  j = nlohmann::json::object();
  j["phi"] = s.phi;
  for (std::size_t i = 0; i < kSlices; ++i) {
    auto& js = j["slices"][std::string(kSliceNames[i])];
    for (std::size_t f = 0; f < kFeatures; ++f) {
      js[std::string(kFeatureNames[f])] = {{"mean", s.slices[i].features[f].mean},
                                           {"stddev", s.slices[i].features[f].stddev}};
    }
  }
}

void from_json(const nlohmann::json& j, Scenario& s) {
  s = Scenario::default_scenario();
  try {
    if (j.contains("phi")) s.phi = j.at("phi").get<double>();
    if (!j.contains("slices")) return;
    for (std::size_t i = 0; i < kSlices; ++i) {
      const std::string name(kSliceNames[i]);
      if (!j["slices"].contains(name)) continue;
      const auto& js = j["slices"][name];
      for (std::size_t f = 0; f < kFeatures; ++f) {
        const std::string fname(kFeatureNames[f]);
        if (!js.contains(fname)) continue;
        auto& p = s.slices[i].features[f];
        p.mean = js[fname].value("mean", p.mean);
        p.stddev = js[fname].value("stddev", p.stddev);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scenario: ") + e.what());
  }
}

Stream generate_traffic(std::uint64_t seed, std::size_t ticks, const Scenario& scenario) {
  scenario.validate();
  Rng rng(mix_seed(seed, 0x6B7069));  // "kpi"
  const double innov = std::sqrt(1.0 - scenario.phi * scenario.phi);

  std::array<std::array<double, kFeatures>, kSlices> state{};
  for (std::size_t s = 0; s < kSlices; ++s)
    for (std::size_t f = 0; f < kFeatures; ++f) {
      const auto& p = scenario.slices[s].features[f];
      state[s][f] = p.mean + p.stddev * rng.normal();
    }

  Stream out;
  out.reserve(ticks);
  for (std::size_t t = 0; t < ticks; ++t) {
    Tick tick;
    tick.timestamp = t;
    for (std::size_t s = 0; s < kSlices; ++s) {
      auto& r = tick.reports[s];
      r.slice = static_cast<Slice>(s);
      r.timestamp = t;
      r.throughput_mbps = std::max(0.0, state[s][kThroughput]);
      r.buffer_bytes = std::max(0.0, state[s][kBuffer]);
      r.requested_prbs = std::max(0.0, state[s][kRequestedPrbs]);
      r.num_ues = static_cast<std::uint32_t>(std::lround(std::max(0.0, state[s][kNumUes])));
      for (std::size_t f = 0; f < kFeatures; ++f) {
        const auto& p = scenario.slices[s].features[f];
        state[s][f] = p.mean + scenario.phi * (state[s][f] - p.mean) + p.stddev * innov * rng.normal();
      }
    }
    out.push_back(tick);
  }
  return out;
}

KpiWindow window_at(const Stream& stream, std::size_t start, std::size_t w) {
  if (start + w > stream.size()) throw InputError("window runs past the end of the stream");
  KpiWindow win;
  win.ticks = w;
  win.values.resize(w * kFeaturesPerTick);
  for (std::size_t t = 0; t < w; ++t)
    for (std::size_t s = 0; s < kSlices; ++s)
      for (std::size_t f = 0; f < kFeatures; ++f)
        win.at(t, s, f) = feature_of(stream[start + t].reports[s], f);
  return win;
}

void to_json(nlohmann::json& j, const NormStats& s) {
  j = {{"min", s.min}, {"max", s.max}, {"layout", "slice-major: index = slice * 4 + feature"}};
}

void from_json(const nlohmann::json& j, NormStats& s) {
  s.min = j.at("min").get<std::array<double, kFeaturesPerTick>>();
  s.max = j.at("max").get<std::array<double, kFeaturesPerTick>>();
}

NormStats compute_stats(const std::vector<KpiWindow>& raw) {
  NormStats st;
  st.min.fill(std::numeric_limits<double>::infinity());
  st.max.fill(-std::numeric_limits<double>::infinity());
  for (const auto& w : raw) {
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      const std::size_t f = i % kFeaturesPerTick;
      st.min[f] = std::min(st.min[f], w.values[i]);
      st.max[f] = std::max(st.max[f], w.values[i]);
    }
  }
  return st;
}

KpiWindow normalize(const KpiWindow& raw, const NormStats& stats) {
  KpiWindow out = raw;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::size_t f = i % kFeaturesPerTick;
    out.values[i] = stats.degenerate(f) ? 0.0 : (raw.values[i] - stats.min[f]) / (stats.max[f] - stats.min[f]);
  }
  return out;
}

KpiWindow denormalize(const KpiWindow& norm, const NormStats& stats) {
  KpiWindow out = norm;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::size_t f = i % kFeaturesPerTick;
    out.values[i] = stats.degenerate(f) ? stats.min[f]
                                        : stats.min[f] + norm.values[i] * (stats.max[f] - stats.min[f]);
  }
  return out;
}

Dataset build_dataset(const Stream& stream, std::size_t w, std::uint64_t seed,
                      double train_fraction) {
  if (w == 0) throw InputError("window length must be >= 1");
  if (stream.size() < w) {
    throw InputError("stream of " + std::to_string(stream.size()) + " ticks is shorter than W=" +
                     std::to_string(w));
  }
  const std::size_t n = stream.size() - w + 1;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with the portable generator.
  Rng rng(mix_seed(seed, 0x73706C6974));  // "split"
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const auto n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n))));

  std::vector<KpiWindow> raw_train, raw_val;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? raw_train : raw_val).push_back(window_at(stream, order[i], w));
  }

  Dataset ds;
  ds.window = w;
  ds.stats = compute_stats(raw_train);
  for (std::size_t f = 0; f < kFeaturesPerTick; ++f) {
    if (ds.stats.degenerate(f)) {
      ds.warnings.push_back("feature " + feature_label(f) +
                            " is constant on the training split; pinned to 0");
    }
  }
  for (const auto& r : raw_train) ds.train.push_back(normalize(r, ds.stats));
  for (const auto& r : raw_val) ds.validation.push_back(normalize(r, ds.stats));
  return ds;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_stream_csv(std::ostream& os, const Stream& stream) {
  os << "tick,slice,throughput_mbps,buffer_bytes,requested_prbs,num_ues\n";
  for (const auto& tick : stream) {
    for (const auto& r : tick.reports) {
      os << r.timestamp << ',' << slice_name(r.slice) << ',' << format_double(r.throughput_mbps)
         << ',' << format_double(r.buffer_bytes) << ',' << format_double(r.requested_prbs) << ','
         << r.num_ues << '\n';
    }
  }
}

namespace {

double parse_num(std::string_view s, std::size_t line) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v) || v < 0) {
    throw InputError("dataset line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Stream read_stream_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      line != "tick,slice,throughput_mbps,buffer_bytes,requested_prbs,num_ues") {
    throw InputError("dataset CSV header mismatch");
  }
  Stream out;
  std::size_t lineno = 1;
  std::size_t next_slice = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    for (;;) {
      const auto p = rest.find(',');
      cols.push_back(rest.substr(0, p));
      if (p == std::string_view::npos) break;
      rest.remove_prefix(p + 1);
    }
    if (cols.size() != 6) throw InputError("dataset line " + std::to_string(lineno) + ": need 6 columns");
    KpiReport r;
    r.timestamp = static_cast<std::uint64_t>(parse_num(cols[0], lineno));
    r.slice = parse_slice(cols[1]);
    r.throughput_mbps = parse_num(cols[2], lineno);
    r.buffer_bytes = parse_num(cols[3], lineno);
    r.requested_prbs = parse_num(cols[4], lineno);
    r.num_ues = static_cast<std::uint32_t>(parse_num(cols[5], lineno));
    if (static_cast<std::size_t>(r.slice) != next_slice) {
      throw InputError("dataset line " + std::to_string(lineno) + ": slices out of order");
    }
    if (next_slice == 0) {
      out.push_back(Tick{r.timestamp, {}});
    } else if (out.back().timestamp != r.timestamp) {
      throw InputError("dataset line " + std::to_string(lineno) + ": tick mismatch within a period");
    }
    out.back().reports[next_slice] = r;
    next_slice = (next_slice + 1) % kSlices;
  }
  if (next_slice != 0) throw InputError("dataset ends mid-tick");
  return out;
}

}  // namespace oran_sec::kpi
