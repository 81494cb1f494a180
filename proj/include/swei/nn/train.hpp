#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swei/nn/network.hpp"
#include "swei/types.hpp"

namespace swei::nn {

struct TrainConfig {
  std::size_t batch_size = 128;
  double peak_lr = 5e-4;
  double weight_decay = 1e-4;
  std::size_t epochs = 90;
  std::uint64_t seed = 0;
  /// Train biases only; every ".w" tensor keeps its initial value.
  bool freeze_weights = false;

  void validate() const;
};

/// Cosine warm-up from peak/25 to peak over the first 30% of steps, then
/// cosine annealing to peak/1e4 at the last step. Throws BadStep.
double onecycle_lr(std::size_t step, std::size_t total_steps, double peak_lr);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

/// Decoupled weight decay w <- w (1 - lr wd) on decaying tensors, then the
/// bias-corrected Adam update. Frozen tensors (decay tensors when
/// `freeze_weights`) are left untouched.
void adam_step(std::span<Parameter<float>> params, AdamState& state, double lr,
               double weight_decay, bool freeze_weights = false);

/// Canonical-shape inputs packed back to back with their labels in m/s.
struct TrainingSet {
  std::size_t sample_size = 0;
  std::vector<float> inputs;
  std::vector<double> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> input(std::size_t i) const noexcept {
    return std::span<const float>(inputs).subspan(i * sample_size, sample_size);
  }
};

/// Throws BadShape when a plot is not in_x x in_t, BadLabel on a non-positive label.
TrainingSet make_training_set(std::span<const LabeledPlot> plots, const NetConfig& config);

/// Mean log-normal loss over `indices`; gradients of that mean are accumulated
/// into the network (call zero_grad first). Throws NanLoss.
double batch_loss_and_grad(Network<float>& net, const TrainingSet& data,
                           std::span<const std::size_t> indices, Workspace<float>& ws);

/// Mean loss of the whole set without touching gradients.
double mean_loss(const Network<float>& net, const TrainingSet& data);

struct EpochStat {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ModelWeights weights;
  std::vector<EpochStat> trace;
};

/// Mini-batch Adam with the 1cycle schedule. Deterministic given the seed:
/// epoch e shuffles with derive_seed(seed, e + 1) and samples are reduced in
/// batch order.
TrainResult train(const TrainingSet& data, const ModelWeights& initial, const TrainConfig& config);

/// Same, starting from init_model(net, derive_seed(config.seed, 0)).
TrainResult train(const TrainingSet& data, const NetConfig& net, const TrainConfig& config);

}  // namespace swei::nn
