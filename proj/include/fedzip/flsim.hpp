#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedzip/ebcodec.hpp"
#include "fedzip/lossless.hpp"
#include "fedzip/netsim.hpp"
#include "fedzip/pipeline.hpp"
#include "fedzip/tensor_store.hpp"

namespace fedzip::fl {

// Gaussian-blob classification task.
struct SyntheticTask {
  std::uint64_t seed = 7;
  std::size_t num_classes = 20;
  std::size_t input_dim = 32;
  double center_scale = 0.75;  // std-dev of the class-center coordinates
  double noise_sigma = 1.0;
  std::size_t samples_per_client = 256;
  std::size_t eval_samples = 2000;
};

struct Dataset {
  std::size_t dim = 0;
  std::vector<float> features;   // row-major, size() x dim
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
};

struct TaskData {
  std::vector<std::vector<float>> centers;
  std::vector<Dataset> clients;
  Dataset eval;
};

TaskData gen_task(const SyntheticTask& task, std::size_t num_clients);

// Two-layer rectifier network in double precision for training. Its state dict
// holds fc1.weight (h x d), fc1.bias (h), fc2.weight (k x h), fc2.bias (k), f32.
class TinyNet {
 public:
  TinyNet(std::size_t input_dim, std::size_t hidden, std::size_t classes);

  static TinyNet init(std::size_t input_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed);
  static TinyNet from_state(const StateDict& state);
  StateDict to_state() const;

  std::size_t input_dim() const noexcept { return d_; }
  std::size_t hidden() const noexcept { return h_; }
  std::size_t classes() const noexcept { return k_; }

  // All parameters as one vector: fc1.weight, fc1.bias, fc2.weight, fc2.bias.
  std::vector<double>& params() noexcept { return p_; }
  const std::vector<double>& params() const noexcept { return p_; }

  // Mean softmax cross-entropy over the given samples.
  double loss(const Dataset& data, std::span<const std::size_t> idx) const;
  // Loss and its gradient with respect to params().
  double loss_and_gradient(const Dataset& data, std::span<const std::size_t> idx, std::vector<double>& grad) const;
  // Hidden-unit activation pattern; a change means a finite difference crossed a kink.
  std::vector<bool> active_units(std::span<const float> x) const;

  std::uint32_t predict(std::span<const float> x) const;
  double accuracy(const Dataset& data) const;

 private:
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return h_ * d_; }
  std::size_t w2() const { return b1() + h_; }
  std::size_t b2() const { return w2() + k_ * h_; }
  void forward(std::span<const float> x, std::vector<double>& hidden, std::vector<double>& logits) const;

  std::size_t d_, h_, k_;
  std::vector<double> p_;
};

StateDict local_train(const StateDict& model, const Dataset& data, std::size_t epochs, double lr,
                      std::size_t batch_size, std::uint64_t seed);

double evaluate(const StateDict& model, const Dataset& data);

// Per-tensor weighted mean; weights are normalized to sum to one.
StateDict fedavg_aggregate(std::span<const StateDict> states, std::span<const double> weights);

enum class ClockMode { virtual_time, real_time };

// Compute time charged for compression in virtual-time mode, where wall-clock
// measurements would make runs irreproducible.
struct ComputeModel {
  double compress_bytes_per_s = 100e6;
  double decompress_bytes_per_s = 200e6;
};

struct FLConfig {
  std::size_t clients = 4;
  std::size_t rounds = 20;
  std::size_t local_epochs = 1;
  double lr = 0.2;
  std::size_t batch_size = 32;
  std::size_t hidden = 64;
  std::optional<CodecSpec> codec;  // nullopt: send raw updates
  RoutingRule rule;
  LosslessSpec lossless;
  NetworkModel network;
  SyntheticTask task;
  std::uint64_t seed = 7;
  ClockMode clock = ClockMode::virtual_time;
  ComputeModel compute;

  // Sets both the training seed and the task seed.
  FLConfig& with_seed(std::uint64_t s) {
    seed = s;
    task.seed = s;
    return *this;
  }
};

void validate(const FLConfig& cfg);

struct ClientMetrics {
  std::size_t client = 0;
  double compress_seconds = 0.0;
  double decompress_seconds = 0.0;
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;  // bytes sent; equals original_bytes without a codec
  double transfer_seconds = 0.0;
  double comm_seconds = 0.0;           // compress + transfer + decompress
  double max_abs_error = 0.0;          // over lossy entries
  double mean_abs_error = 0.0;
  double max_error_to_bound = 0.0;     // max over lossy entries of max error / eps_abs
  double max_eps_abs = 0.0;
};

struct RoundMetrics {
  std::size_t round = 0;
  double accuracy = 0.0;
  std::vector<ClientMetrics> clients;
  double comm_seconds = 0.0;  // sum over clients
  double wall_seconds = 0.0;
};

struct ExperimentReport {
  std::string codec_label;
  double epsilon = 0.0;
  std::vector<RoundMetrics> rounds;
  double final_accuracy = 0.0;
  double total_comm_seconds = 0.0;
  double mean_ratio = 0.0;
};

// Called once per client per round with the trained client state and what the
// server reconstructed from it.
using UpdateObserver =
    std::function<void(std::size_t round, std::size_t client, const StateDict& sent, const StateDict& received)>;

struct Simulation {
  FLConfig cfg;
  TaskData data;
  std::unique_ptr<Clock> clock;
  StateDict global;

  explicit Simulation(FLConfig config);
};

std::pair<StateDict, RoundMetrics> run_round(const FLConfig& cfg, const TaskData& data, Clock& clock,
                                             const StateDict& global_state, std::size_t round_idx,
                                             const UpdateObserver& observer = {});

ExperimentReport run_experiment(const FLConfig& cfg, const UpdateObserver& observer = {},
                                StateDict* final_state = nullptr);

// Runs the configured experiment once per epsilon (and once uncompressed for
// the baseline accuracy) and collects one grid row for the configured codec.
SelectionGrid sweep_epsilon(const FLConfig& cfg, std::span<const double> epsilons);

}  // namespace fedzip::fl
