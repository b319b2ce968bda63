#pragma once

// RIC-side decision stage: a denoising autoencoder in front of a fixed
// surrogate slicing/scheduling policy.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "oran_sec/bytes.hpp"
#include "oran_sec/kpi.hpp"

namespace oran_sec::intelligence {

inline constexpr int kTotalPrbs = 50;

enum class Activation { Tanh, Sigmoid };

struct Layer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
  Activation act = Activation::Tanh;
};

struct TrainConfig {
  std::size_t hidden_dim = 32;
  std::size_t latent_dim = 8;
  std::size_t epochs = 200;
  double learning_rate = 3e-3;
  std::size_t batch_size = 32;
  double noise_sigma = 0.2;  // zero-mean corruption of training inputs
  std::uint64_t seed = 0;

  void validate(std::size_t input_dim) const;  // throws ConfigError
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Gradient of the loss with respect to every parameter, in flat order.
struct LossGradient {
  double loss = 0;
  std::vector<double> grad;
};

// Fully connected autoencoder with tanh on every layer. Loss is the mean
// squared error over all elements of a batch.
// Immutable once trained; const members are safe to call concurrently.
class Autoencoder {
 public:
  Autoencoder() = default;
  // Zero weights and biases. dims = {input, hidden..., latent, hidden..., input}.
  explicit Autoencoder(const std::vector<std::size_t>& dims);
  // Glorot-uniform weights, zero biases.
  static Autoencoder random(const std::vector<std::size_t>& dims, std::uint64_t seed);
  static std::vector<std::size_t> shape(std::size_t input, const TrainConfig& c);

  std::size_t input_dim() const;
  std::size_t latent_dim() const;
  std::vector<std::size_t> dims() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  // Columns are samples.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd encode(const Eigen::MatrixXd& x) const;
  double loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) const;
  LossGradient gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) const;

  // Throws InputError if the window size differs from input_dim().
  kpi::KpiWindow reconstruct(const kpi::KpiWindow& window) const;

  // Flat parameter order: for each layer, W row-major then b.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& p);

  // Metadata carried in the model file.
  kpi::NormStats stats{};
  std::size_t window = 0;
  TrainConfig config{};
  double val_mse = 0;

 private:
  std::vector<Layer> layers_;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean training loss on corrupted inputs
  double train_mse = 0;            // clean inputs
  double val_mse = 0;
  double baseline_val_mse = 0;     // per-element training mean as predictor
};

void to_json(nlohmann::json& j, const TrainReport& r);

// Deterministic given (dataset, config). Throws TrainingError on a
// non-finite loss, ConfigError on an invalid config.
Autoencoder train_autoencoder(const kpi::Dataset& data, const TrainConfig& config,
                              TrainReport* report = nullptr);

double mse(const Autoencoder& ae, const std::vector<kpi::KpiWindow>& windows);
double mean_predictor_mse(const std::vector<kpi::KpiWindow>& train,
                          const std::vector<kpi::KpiWindow>& eval);
Eigen::MatrixXd to_matrix(const std::vector<kpi::KpiWindow>& windows);

// Largest relative difference between gradient() and central differences
// with step h. Relative error is |a - n| / max(|a|, |n|, floor).
double gradient_check(const Autoencoder& ae, const Eigen::MatrixXd& x,
                      const Eigen::MatrixXd& target, double h = 1e-4, double floor = 1e-8);

// Model file: "E2AEMDL1", u64 LE header length, JSON header, LE f64 weights.
Bytes save_model_bytes(const Autoencoder& ae);
Autoencoder load_model_bytes(ByteView bytes);  // throws InputError
void save_model(const Autoencoder& ae, const std::filesystem::path& path);
Autoencoder load_model(const std::filesystem::path& path);  // throws ConfigError if missing
std::string model_hash(const Autoencoder& ae);                // SHA-256 of the file bytes

struct AgentAction {
  std::array<int, kpi::kSlices> sched{};    // each in {0, 1, 2}
  std::array<int, kpi::kSlices> slicing{};  // PRBs, sum 50

  bool operator==(const AgentAction&) const = default;
};

// Largest-remainder split of `total` proportional to scores. Negative
// scores count as 0; an all-zero vector splits equally. Ties go to the
// lower slice index.
std::array<int, kpi::kSlices> apportion(const std::array<double, kpi::kSlices>& scores,
                                        int total = kTotalPrbs);

// Per-slice demand 0.5 mean(buffer) + 0.3 mean(requested PRBs) + 0.2 mean(UEs).
std::array<double, kpi::kSlices> demand_scores(const kpi::KpiWindow& window);

// Slicing by apportion(demand_scores); scheduling 0/1/2 by mean buffer
// below 0.33 / below 0.66 / otherwise.
AgentAction surrogate_policy(const kpi::KpiWindow& window);

AgentAction decide(const kpi::KpiWindow& window, const Autoencoder* ae);

}  // namespace oran_sec::intelligence
