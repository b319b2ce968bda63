#include "oran_sec/intelligence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "oran_sec/error.hpp"
#include "oran_sec/rng.hpp"
#include "oran_sec/secchan.hpp"

namespace oran_sec::intelligence {

namespace {

constexpr char kModelMagic[8] = {'E', '2', 'A', 'E', 'M', 'D', 'L', '1'};

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::Tanh) return z.array().tanh().matrix();
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Derivative expressed through the activation output.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& a, Activation act) {
  if (act == Activation::Tanh) return (1.0 - a.array().square()).matrix();
  return (a.array() * (1.0 - a.array())).matrix();
}

std::string_view activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "sigmoid"; }

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw InputError("unknown activation '" + s + "'");
}

struct LayerGrad {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

struct Pass {
  double loss = 0;
  std::vector<LayerGrad> grads;
};

Pass backprop(const std::vector<Layer>& layers, const Eigen::MatrixXd& x,
              const Eigen::MatrixXd& target) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(x);
  for (const auto& l : layers) {
    Eigen::MatrixXd z = l.w * acts.back();
    z.colwise() += l.b;
    acts.push_back(activate(z, l.act));
  }
  const double n = static_cast<double>(x.size());
  const Eigen::MatrixXd diff = acts.back() - target;
  Pass p;
  p.loss = diff.squaredNorm() / n;
  p.grads.resize(layers.size());
  Eigen::MatrixXd delta =
      ((2.0 / n) * diff).cwiseProduct(activation_slope(acts.back(), layers.back().act));
  for (std::size_t i = layers.size(); i-- > 0;) {
    p.grads[i].w = delta * acts[i].transpose();
    p.grads[i].b = delta.rowwise().sum();
    if (i > 0) {
      delta = (layers[i].w.transpose() * delta)
                  .cwiseProduct(activation_slope(acts[i], layers[i - 1].act));
    }
  }
  return p;
}

void check_finite(double loss, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "non-finite training loss at epoch " << epoch << ", batch " << batch
       << "; lower learning_rate or noise_sigma";
    throw TrainingError(os.str());
  }
}

void put_le64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void TrainConfig::validate(std::size_t input_dim) const {
  if (latent_dim == 0 || hidden_dim == 0) throw ConfigError("layer widths must be positive");
  if (latent_dim >= input_dim)
    throw ConfigError("latent_dim must be smaller than the input dimension " +
                      std::to_string(input_dim));
  if (epochs == 0 || batch_size == 0) throw ConfigError("epochs and batch_size must be positive");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be positive");
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma))
    throw ConfigError("noise_sigma must be non-negative");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"hidden_dim", c.hidden_dim}, {"latent_dim", c.latent_dim},
       {"epochs", c.epochs},         {"learning_rate", c.learning_rate},
       {"batch_size", c.batch_size}, {"noise_sigma", c.noise_sigma},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  try {
    if (j.contains("hidden_dim")) c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    if (j.contains("latent_dim")) c.latent_dim = j.at("latent_dim").get<std::size_t>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("noise_sigma")) c.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ae: ") + e.what());
  }
}

Autoencoder::Autoencoder(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw ParameterError("autoencoder needs at least two layer widths");
  for (std::size_t i = 1; i < dims.size(); ++i) {
    Layer l;
    l.w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims[i]),
                                static_cast<Eigen::Index>(dims[i - 1]));
    l.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims[i]));
    l.act = Activation::Tanh;
    layers_.push_back(std::move(l));
  }
}

Autoencoder Autoencoder::random(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  Autoencoder ae(dims);
  Rng rng(seed);
  for (auto& l : ae.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.w.rows() + l.w.cols()));
    for (Eigen::Index r = 0; r < l.w.rows(); ++r)
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) l.w(r, c) = (2 * rng.uniform() - 1) * limit;
  }
  return ae;
}

std::vector<std::size_t> Autoencoder::shape(std::size_t input, const TrainConfig& c) {
  return {input, c.hidden_dim, c.latent_dim, c.hidden_dim, input};
}

std::size_t Autoencoder::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().w.cols());
}

std::size_t Autoencoder::latent_dim() const {
  std::size_t m = input_dim();
  for (const auto& l : layers_) m = std::min(m, static_cast<std::size_t>(l.w.rows()));
  return m;
}

std::vector<std::size_t> Autoencoder::dims() const {
  std::vector<std::size_t> d{input_dim()};
  for (const auto& l : layers_) d.push_back(static_cast<std::size_t>(l.w.rows()));
  return d;
}

Eigen::MatrixXd Autoencoder::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  for (const auto& l : layers_) {
    Eigen::MatrixXd z = l.w * a;
    z.colwise() += l.b;
    a = activate(z, l.act);
  }
  return a;
}

Eigen::MatrixXd Autoencoder::encode(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  const std::size_t latent = latent_dim();
  for (const auto& l : layers_) {
    Eigen::MatrixXd z = l.w * a;
    z.colwise() += l.b;
    a = activate(z, l.act);
    if (static_cast<std::size_t>(a.rows()) == latent) break;
  }
  return a;
}

double Autoencoder::loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) const {
  return (forward(x) - target).squaredNorm() / static_cast<double>(x.size());
}

LossGradient Autoencoder::gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) const {
  const Pass p = backprop(layers_, x, target);
  LossGradient out;
  out.loss = p.loss;
  out.grad.reserve(parameter_count());
  for (const auto& g : p.grads) {
    for (Eigen::Index r = 0; r < g.w.rows(); ++r)
      for (Eigen::Index c = 0; c < g.w.cols(); ++c) out.grad.push_back(g.w(r, c));
    for (Eigen::Index r = 0; r < g.b.size(); ++r) out.grad.push_back(g.b(r));
  }
  return out;
}

kpi::KpiWindow Autoencoder::reconstruct(const kpi::KpiWindow& window) const {
  if (window.size() != input_dim())
    throw InputError("window has " + std::to_string(window.size()) +
                     " values, autoencoder expects " + std::to_string(input_dim()));
  const Eigen::Map<const Eigen::VectorXd> x(window.values.data(),
                                            static_cast<Eigen::Index>(window.size()));
  const Eigen::VectorXd y = forward(x);
  kpi::KpiWindow out{window.ticks, std::vector<double>(y.data(), y.data() + y.size())};
  return out;
}

std::size_t Autoencoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

std::vector<double> Autoencoder::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.w.rows(); ++r)
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) p.push_back(l.w(r, c));
    for (Eigen::Index r = 0; r < l.b.size(); ++r) p.push_back(l.b(r));
  }
  return p;
}

void Autoencoder::set_parameters(const std::vector<double>& p) {
  if (p.size() != parameter_count())
    throw ParameterError("expected " + std::to_string(parameter_count()) + " parameters, got " +
                         std::to_string(p.size()));
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.w.rows(); ++r)
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) l.w(r, c) = p[k++];
    for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b(r) = p[k++];
  }
}

void to_json(nlohmann::json& j, const TrainReport& r) {
  j = {{"train_mse", r.train_mse},
       {"val_mse", r.val_mse},
       {"baseline_val_mse", r.baseline_val_mse},
       {"epochs", r.epoch_loss.size()},
       {"final_epoch_loss", r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()}};
}

Eigen::MatrixXd to_matrix(const std::vector<kpi::KpiWindow>& windows) {
  if (windows.empty()) return {};
  const auto d = static_cast<Eigen::Index>(windows.front().size());
  Eigen::MatrixXd m(d, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (static_cast<Eigen::Index>(windows[i].size()) != d)
      throw InputError("windows have inconsistent sizes");
    m.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXd>(windows[i].values.data(), d);
  }
  return m;
}

double mse(const Autoencoder& ae, const std::vector<kpi::KpiWindow>& windows) {
  if (windows.empty()) return 0;
  const Eigen::MatrixXd x = to_matrix(windows);
  if (static_cast<std::size_t>(x.rows()) != ae.input_dim())
    throw InputError("window size does not match the autoencoder");
  return ae.loss(x, x);
}

double mean_predictor_mse(const std::vector<kpi::KpiWindow>& train,
                          const std::vector<kpi::KpiWindow>& eval) {
  if (train.empty() || eval.empty()) return 0;
  const Eigen::VectorXd mean = to_matrix(train).rowwise().mean();
  Eigen::MatrixXd e = to_matrix(eval);
  e.colwise() -= mean;
  return e.squaredNorm() / static_cast<double>(e.size());
}

Autoencoder train_autoencoder(const kpi::Dataset& data, const TrainConfig& config,
                              TrainReport* report) {
  if (data.train.empty()) throw InputError("empty training split");
  const Eigen::MatrixXd x = to_matrix(data.train);
  const std::size_t d = static_cast<std::size_t>(x.rows());
  const std::size_t n = static_cast<std::size_t>(x.cols());
  config.validate(d);

  Autoencoder ae = Autoencoder::random(Autoencoder::shape(d, config), mix_seed(config.seed, 1));
  Rng rng(mix_seed(config.seed, 2));

  auto& layers = ae.layers();
  std::vector<LayerGrad> m(layers.size()), v(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    m[i] = {Eigen::MatrixXd::Zero(layers[i].w.rows(), layers[i].w.cols()),
            Eigen::VectorXd::Zero(layers[i].b.size())};
    v[i] = m[i];
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double beta1_t = 1, beta2_t = 1;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  TrainReport rep;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    double epoch_loss = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_no) {
      const std::size_t bs = std::min(config.batch_size, n - start);
      Eigen::MatrixXd target(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(bs));
      for (std::size_t k = 0; k < bs; ++k)
        target.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(order[start + k]));
      Eigen::MatrixXd input = target;
      if (config.noise_sigma > 0) {
        for (Eigen::Index c = 0; c < input.cols(); ++c)
          for (Eigen::Index r = 0; r < input.rows(); ++r)
            input(r, c) += config.noise_sigma * rng.normal();
      }
      const Pass p = backprop(layers, input, target);
      check_finite(p.loss, epoch, batch_no);
      epoch_loss += p.loss * static_cast<double>(bs);

      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      const double step = config.learning_rate * std::sqrt(1 - beta2_t) / (1 - beta1_t);
      for (std::size_t i = 0; i < layers.size(); ++i) {
        m[i].w = kBeta1 * m[i].w + (1 - kBeta1) * p.grads[i].w;
        m[i].b = kBeta1 * m[i].b + (1 - kBeta1) * p.grads[i].b;
        v[i].w = kBeta2 * v[i].w + (1 - kBeta2) * p.grads[i].w.cwiseAbs2();
        v[i].b = kBeta2 * v[i].b + (1 - kBeta2) * p.grads[i].b.cwiseAbs2();
        layers[i].w.array() -= step * m[i].w.array() / (v[i].w.array().sqrt() + kEps);
        layers[i].b.array() -= step * m[i].b.array() / (v[i].b.array().sqrt() + kEps);
      }
    }
    rep.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }

  rep.train_mse = mse(ae, data.train);
  rep.val_mse = data.validation.empty() ? rep.train_mse : mse(ae, data.validation);
  rep.baseline_val_mse = mean_predictor_mse(
      data.train, data.validation.empty() ? data.train : data.validation);
  if (!std::isfinite(rep.train_mse) || !std::isfinite(rep.val_mse))
    throw TrainingError("trained autoencoder produces non-finite reconstructions");

  ae.stats = data.stats;
  ae.window = data.window;
  ae.config = config;
  ae.val_mse = rep.val_mse;
  if (report) *report = std::move(rep);
  return ae;
}

double gradient_check(const Autoencoder& ae, const Eigen::MatrixXd& x,
                      const Eigen::MatrixXd& target, double h, double floor) {
  const auto analytic = ae.gradient(x, target).grad;
  Autoencoder probe = ae;
  double worst = 0;
  std::size_t i = 0;
  auto check = [&](double& param) {
    const double orig = param;
    param = orig + h;
    const double up = probe.loss(x, target);
    param = orig - h;
    const double down = probe.loss(x, target);
    param = orig;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    ++i;
  };
  for (auto& layer : probe.layers()) {
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) check(layer.w(r, c));
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) check(layer.b(r));
  }
  return worst;
}

Bytes save_model_bytes(const Autoencoder& ae) {
  nlohmann::json h;
  h["format"] = "E2AEMDL1";
  h["dims"] = ae.dims();
  auto acts = nlohmann::json::array();
  for (const auto& l : ae.layers()) acts.push_back(activation_name(l.act));
  h["activations"] = acts;
  h["window"] = ae.window;
  h["norm_stats"] = ae.stats;
  h["train_config"] = ae.config;
  const std::string cfg = nlohmann::json(ae.config).dump();
  h["train_config_hash"] = secchan::sha256_hex(
      ByteView(reinterpret_cast<const std::uint8_t*>(cfg.data()), cfg.size()));
  h["val_mse"] = ae.val_mse;
  h["param_count"] = ae.parameter_count();
  const std::string header = h.dump();

  Bytes out(kModelMagic, kModelMagic + 8);
  put_le64(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  for (double w : ae.parameters()) put_le64(out, std::bit_cast<std::uint64_t>(w));
  return out;
}

Autoencoder load_model_bytes(ByteView bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kModelMagic, 8) != 0)
    throw InputError("not an autoencoder model file");
  const std::uint64_t hlen = get_le64(bytes.data() + 8);
  if (hlen > bytes.size() - 16) throw InputError("model header length exceeds file size");
  nlohmann::json h;
  Autoencoder ae;
  try {
    h = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(hlen));
    const auto dims = h.at("dims").get<std::vector<std::size_t>>();
    ae = Autoencoder(dims);
    const auto acts = h.at("activations").get<std::vector<std::string>>();
    if (acts.size() != ae.layers().size()) throw InputError("activation list does not match dims");
    auto& layers = ae.layers();
    for (std::size_t i = 0; i < acts.size(); ++i) layers[i].act = parse_activation(acts[i]);
    ae.window = h.at("window").get<std::size_t>();
    ae.stats = h.at("norm_stats").get<kpi::NormStats>();
    ae.config = h.at("train_config").get<TrainConfig>();
    ae.val_mse = h.at("val_mse").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model header: ") + e.what());
  } catch (const ParameterError& e) {
    throw InputError(std::string("bad model header: ") + e.what());
  } catch (const ConfigError& e) {
    throw InputError(std::string("bad model header: ") + e.what());
  }
  const std::size_t body = bytes.size() - 16 - hlen;
  if (body != ae.parameter_count() * 8)
    throw InputError("model body holds " + std::to_string(body) + " bytes, expected " +
                     std::to_string(ae.parameter_count() * 8));
  std::vector<double> p(ae.parameter_count());
  const std::uint8_t* w = bytes.data() + 16 + hlen;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::bit_cast<double>(get_le64(w + 8 * i));
  ae.set_parameters(p);
  return ae;
}

void save_model(const Autoencoder& ae, const std::filesystem::path& path) {
  const Bytes b = save_model_bytes(ae);
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!f) throw Error("cannot write model file " + path.string());
}

Autoencoder load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open model file " + path.string());
  const Bytes b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return load_model_bytes(b);
}

std::string model_hash(const Autoencoder& ae) { return secchan::sha256_hex(save_model_bytes(ae)); }

std::array<int, kpi::kSlices> apportion(const std::array<double, kpi::kSlices>& scores,
                                        int total) {
  std::array<double, kpi::kSlices> s{};
  double sum = 0;
  for (std::size_t i = 0; i < kpi::kSlices; ++i) {
    s[i] = std::isfinite(scores[i]) ? std::max(0.0, scores[i]) : 0.0;
    sum += s[i];
  }
  if (!(sum > 0)) s.fill(1.0), sum = static_cast<double>(kpi::kSlices);

  std::array<int, kpi::kSlices> out{};
  std::array<double, kpi::kSlices> rem{};
  int assigned = 0;
  for (std::size_t i = 0; i < kpi::kSlices; ++i) {
    const double q = static_cast<double>(total) * s[i] / sum;
    // Absorb rounding so exact integer quotas stay exact under rescaling.
    const double fl = std::floor(q + 1e-9);
    out[i] = static_cast<int>(fl);
    rem[i] = q - fl;
    assigned += out[i];
  }
  std::array<std::size_t, kpi::kSlices> idx{0, 1, 2};
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return rem[a] > rem[b] + 1e-12;
  });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % kpi::kSlices, ++assigned) ++out[idx[k]];
  return out;
}

std::array<double, kpi::kSlices> demand_scores(const kpi::KpiWindow& w) {
  std::array<double, kpi::kSlices> s{};
  if (w.ticks == 0) return s;
  for (std::size_t sl = 0; sl < kpi::kSlices; ++sl) {
    double buf = 0, prb = 0, ues = 0;
    for (std::size_t t = 0; t < w.ticks; ++t) {
      buf += w.at(t, sl, kpi::kBuffer);
      prb += w.at(t, sl, kpi::kRequestedPrbs);
      ues += w.at(t, sl, kpi::kNumUes);
    }
    const double n = static_cast<double>(w.ticks);
    s[sl] = 0.5 * buf / n + 0.3 * prb / n + 0.2 * ues / n;
  }
  return s;
}

AgentAction surrogate_policy(const kpi::KpiWindow& w) {
  if (w.size() != w.ticks * kpi::kFeaturesPerTick) throw InputError("malformed KPI window");
  AgentAction a;
  a.slicing = apportion(demand_scores(w));
  for (std::size_t sl = 0; sl < kpi::kSlices; ++sl) {
    double buf = 0;
    for (std::size_t t = 0; t < w.ticks; ++t) buf += w.at(t, sl, kpi::kBuffer);
    buf /= static_cast<double>(std::max<std::size_t>(w.ticks, 1));
    a.sched[sl] = buf < 0.33 ? 0 : buf < 0.66 ? 1 : 2;
  }
  return a;
}

AgentAction decide(const kpi::KpiWindow& window, const Autoencoder* ae) {
  return ae ? surrogate_policy(ae->reconstruct(window)) : surrogate_policy(window);
}

}  // namespace oran_sec::intelligence
