#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swei/nn/layers.hpp"
#include "swei/types.hpp"

namespace swei::nn {

inline constexpr std::size_t kResidualBlocks = 3;

/// Output-bias initialization: median 2.1 m/s, sigma^2 = 0.09.
inline constexpr double kInitMedian = 2.1;
inline constexpr double kInitVariance = 0.09;

/// A named parameter tensor with its gradient buffer (same extent).
template <typename T>
struct Parameter {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<T> value;
  std::vector<T> grad;
  /// Weights decay, biases do not.
  bool decay = true;
};

/// Network head before the log-variance clamp.
struct RawOutput {
  double mu = 0.0;
  double s_raw = 0.0;
};

NetworkOutput to_network_output(const RawOutput& raw) noexcept;

/// Per-sample activation storage. One workspace per thread; reused across calls.
template <typename T>
struct Workspace {
  explicit Workspace(const NetConfig& config);

  std::vector<T> input;
  std::array<std::vector<T>, kResidualBlocks + 1> trunk;  // block inputs/outputs
  std::array<std::vector<T>, kResidualBlocks> pre1;       // activation(trunk[b])
  std::array<std::vector<T>, kResidualBlocks> mid;        // conv1 output
  std::array<std::vector<T>, kResidualBlocks> pre2;       // activation(mid)
  std::vector<T> pooled;
  std::array<T, 2> head{};
  std::vector<T> grad_trunk, grad_a, grad_b, grad_pooled;
  std::vector<T> scratch;
};

/// Input conv (5x5, unpadded, 1 -> C), three pre-activation residual blocks
/// (act, 3x3 conv, act, 3x3 conv, identity skip), (3, 6) average pooling and a
/// fully connected layer to (mu, s). All activations are LeakyReLU.
template <typename T>
class Network {
 public:
  /// Throws BadConfig / SizeMismatch when the tensors do not match the config.
  explicit Network(const ModelWeights& weights);

  const NetConfig& config() const noexcept { return config_; }
  std::span<Parameter<T>> parameters() noexcept { return params_; }
  std::span<const Parameter<T>> parameters() const noexcept { return params_; }
  ModelWeights weights() const;
  void zero_grad();

  /// One input of in_x * in_t values, lateral-major. Keeps activations in `ws`.
  RawOutput forward(std::span<const T> input, Workspace<T>& ws) const;

  /// Backpropagates dL/dmu and dL/ds_raw for the sample last passed through
  /// `ws`, accumulating into every parameter gradient.
  void backward(T d_mu, T d_s_raw, Workspace<T>& ws);

 private:
  ConvSpec input_conv() const noexcept;
  ConvSpec block_conv() const noexcept;
  Shape4 input_shape() const noexcept;
  Shape4 trunk_shape() const noexcept;
  Shape4 pooled_shape() const noexcept;

  NetConfig config_;
  std::vector<Parameter<T>> params_;
};

using SweiNet = Network<float>;

/// Parameter names in storage order.
std::vector<std::string> parameter_names();

std::size_t parameter_count(const NetConfig& config);

/// He-normal weights (std sqrt(2 / fan_in)) and zero biases, except the head:
/// fc.w is zero and fc.b is (log 2.1, log 0.09). Throws BadConfig.
ModelWeights init_model(const NetConfig& config, std::uint64_t seed);

/// Forward of one canonical-shape plot. Throws BadShape otherwise.
NetworkOutput forward(const SweiNet& net, const SpaceTimePlot& plot, Workspace<float>& ws);

/// Forward over `count` inputs packed back to back.
std::vector<NetworkOutput> predict(const SweiNet& net, std::span<const float> inputs,
                                   std::size_t count);

}  // namespace swei::nn
