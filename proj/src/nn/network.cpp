#include "swei/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "swei/rng.hpp"
#include "swei/uq.hpp"

namespace swei::nn {
namespace {

std::string block_name(std::size_t b, int conv, char kind) {
  return "block" + std::to_string(b) + ".conv" + std::to_string(conv) + "." + kind;
}

struct TensorSpec {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::size_t fan_in;  // 0 for biases
};

std::vector<TensorSpec> tensor_specs(const NetConfig& cfg) {
  const std::uint32_t c = cfg.channels;
  const std::uint32_t k = NetConfig::kInputKernel;
  const std::uint32_t flat = c * cfg.pooled_x() * cfg.pooled_t();
  std::vector<TensorSpec> specs;
  specs.push_back({"conv_in.w", {c, 1, k, k}, std::size_t{k} * k});
  specs.push_back({"conv_in.b", {c}, 0});
  for (std::size_t b = 0; b < kResidualBlocks; ++b) {
    for (int conv = 1; conv <= 2; ++conv) {
      specs.push_back({block_name(b, conv, 'w'), {c, c, 3, 3}, std::size_t{c} * 9});
      specs.push_back({block_name(b, conv, 'b'), {c}, 0});
    }
  }
  specs.push_back({"fc.w", {2, flat}, flat});
  specs.push_back({"fc.b", {2}, 0});
  return specs;
}

constexpr std::size_t kConvIn = 0;
constexpr std::size_t block_param(std::size_t b, std::size_t conv) { return 2 + 4 * b + 2 * conv; }
constexpr std::size_t kFc = 2 + 4 * kResidualBlocks;

template <typename T>
std::span<const T> cview(const std::vector<T>& v) {
  return {v.data(), v.size()};
}

}  // namespace

NetworkOutput to_network_output(const RawOutput& raw) noexcept {
  return {raw.mu, uq::clamp_log_var(raw.s_raw)};
}

std::vector<std::string> parameter_names() {
  std::vector<std::string> names;
  for (auto& s : tensor_specs(NetConfig{})) names.push_back(s.name);
  return names;
}

std::size_t parameter_count(const NetConfig& config) {
  config.validate();
  std::size_t total = 0;
  for (const auto& s : tensor_specs(config)) {
    std::size_t n = 1;
    for (auto d : s.dims) n *= d;
    total += n;
  }
  return total;
}

ModelWeights init_model(const NetConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelWeights weights;
  weights.config = config;
  for (auto& spec : tensor_specs(config)) {
    std::size_t n = 1;
    for (auto d : spec.dims) n *= d;
    NamedTensor t{spec.name, spec.dims, std::vector<float>(n, 0.0f)};
    // The head starts at zero so the first prediction is exactly the prior in
    // fc.b; random head weights can offset s by several nats and stall training.
    if (spec.fan_in > 0 && spec.name != "fc.w") {
      const double sd = std::sqrt(2.0 / static_cast<double>(spec.fan_in));
      for (auto& v : t.values) v = static_cast<float>(rng.normal(0.0, sd));
    }
    if (spec.name == "fc.b") {
      t.values[0] = static_cast<float>(std::log(kInitMedian));
      t.values[1] = static_cast<float>(std::log(kInitVariance));
    }
    weights.tensors.push_back(std::move(t));
  }
  return weights;
}

template <typename T>
Workspace<T>::Workspace(const NetConfig& config) {
  const std::size_t in = std::size_t{config.in_x} * config.in_t;
  const std::size_t trunk_size = std::size_t{config.channels} * config.conv_x() * config.conv_t();
  const std::size_t pooled_size =
      std::size_t{config.channels} * config.pooled_x() * config.pooled_t();
  input.resize(in);
  for (auto& v : trunk) v.resize(trunk_size);
  for (auto* arr : {&pre1, &mid, &pre2}) {
    for (auto& v : *arr) v.resize(trunk_size);
  }
  pooled.resize(pooled_size);
  grad_trunk.resize(trunk_size);
  grad_a.resize(trunk_size);
  grad_b.resize(trunk_size);
  grad_pooled.resize(pooled_size);
}

template <typename T>
Network<T>::Network(const ModelWeights& weights) : config_(weights.config) {
  weights.validate();
  const auto specs = tensor_specs(config_);
  if (weights.tensors.size() != specs.size()) {
    throw Error(Errc::SizeMismatch, "model has " + std::to_string(weights.tensors.size()) +
                                        " tensors, expected " + std::to_string(specs.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& t = weights.tensors[i];
    if (t.name != specs[i].name || t.dims != specs[i].dims) {
      throw Error(Errc::SizeMismatch, "tensor '" + t.name + "' does not match expected '" +
                                          specs[i].name + "'");
    }
    Parameter<T> p;
    p.name = t.name;
    p.dims = t.dims;
    p.value.assign(t.values.begin(), t.values.end());
    p.grad.assign(t.values.size(), T(0));
    p.decay = specs[i].fan_in > 0;
    params_.push_back(std::move(p));
  }
}

template <typename T>
ModelWeights Network<T>::weights() const {
  ModelWeights w;
  w.config = config_;
  for (const auto& p : params_) {
    NamedTensor t{p.name, p.dims, {}};
    t.values.reserve(p.value.size());
    for (T v : p.value) t.values.push_back(static_cast<float>(v));
    w.tensors.push_back(std::move(t));
  }
  return w;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
ConvSpec Network<T>::input_conv() const noexcept {
  return {config_.channels, NetConfig::kInputKernel, 0};
}
template <typename T>
ConvSpec Network<T>::block_conv() const noexcept {
  return {config_.channels, 3, 1};
}
template <typename T>
Shape4 Network<T>::input_shape() const noexcept {
  return {1, 1, config_.in_x, config_.in_t};
}
template <typename T>
Shape4 Network<T>::trunk_shape() const noexcept {
  return {1, config_.channels, config_.conv_x(), config_.conv_t()};
}
template <typename T>
Shape4 Network<T>::pooled_shape() const noexcept {
  return {1, config_.channels, config_.pooled_x(), config_.pooled_t()};
}

template <typename T>
RawOutput Network<T>::forward(std::span<const T> input, Workspace<T>& ws) const {
  if (input.size() != ws.input.size()) {
    throw Error(Errc::BadShape, "input has " + std::to_string(input.size()) + " values, expected " +
                                    std::to_string(ws.input.size()));
  }
  const T slope = static_cast<T>(config_.leaky_slope);
  std::copy(input.begin(), input.end(), ws.input.begin());
  const Shape4 ts = trunk_shape();

  conv2d_forward<T>(cview(ws.input), input_shape(), cview(params_[kConvIn].value),
                    cview(params_[kConvIn + 1].value), input_conv(), ws.trunk[0], ws.scratch);
  for (std::size_t b = 0; b < kResidualBlocks; ++b) {
    const auto& w1 = params_[block_param(b, 0)];
    const auto& b1 = params_[block_param(b, 0) + 1];
    const auto& w2 = params_[block_param(b, 1)];
    const auto& b2 = params_[block_param(b, 1) + 1];
    leaky_relu_forward<T>(cview(ws.trunk[b]), slope, ws.pre1[b]);
    conv2d_forward<T>(cview(ws.pre1[b]), ts, cview(w1.value), cview(b1.value), block_conv(),
                      ws.mid[b], ws.scratch);
    leaky_relu_forward<T>(cview(ws.mid[b]), slope, ws.pre2[b]);
    auto& next = ws.trunk[b + 1];
    conv2d_forward<T>(cview(ws.pre2[b]), ts, cview(w2.value), cview(b2.value), block_conv(), next,
                      ws.scratch);
    const auto& skip = ws.trunk[b];
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += skip[i];
  }
  avg_pool_forward<T>(cview(ws.trunk[kResidualBlocks]), ts, NetConfig::kPoolX, NetConfig::kPoolT,
                      ws.pooled);
  linear_forward<T>(cview(ws.pooled), 1, ws.pooled.size(), cview(params_[kFc].value),
                    cview(params_[kFc + 1].value), 2, ws.head);
  return {static_cast<double>(ws.head[0]), static_cast<double>(ws.head[1])};
}

template <typename T>
void Network<T>::backward(T d_mu, T d_s_raw, Workspace<T>& ws) {
  const T slope = static_cast<T>(config_.leaky_slope);
  const Shape4 ts = trunk_shape();
  const std::array<T, 2> d_head{d_mu, d_s_raw};

  linear_backward<T>(cview(ws.pooled), 1, ws.pooled.size(), cview(params_[kFc].value), 2,
                     std::span<const T>(d_head), ws.grad_pooled, params_[kFc].grad,
                     params_[kFc + 1].grad);
  avg_pool_backward<T>(ts, NetConfig::kPoolX, NetConfig::kPoolT, cview(ws.grad_pooled),
                       ws.grad_trunk);
  for (std::size_t bi = kResidualBlocks; bi-- > 0;) {
    auto& w1 = params_[block_param(bi, 0)];
    auto& b1 = params_[block_param(bi, 0) + 1];
    auto& w2 = params_[block_param(bi, 1)];
    auto& b2 = params_[block_param(bi, 1) + 1];
    conv2d_backward<T>(cview(ws.pre2[bi]), ts, cview(w2.value), block_conv(),
                       cview(ws.grad_trunk), ws.grad_a, w2.grad, b2.grad, ws.scratch);
    leaky_relu_backward<T>(cview(ws.mid[bi]), slope, cview(ws.grad_a), ws.grad_a);
    conv2d_backward<T>(cview(ws.pre1[bi]), ts, cview(w1.value), block_conv(), cview(ws.grad_a),
                       ws.grad_b, w1.grad, b1.grad, ws.scratch);
    leaky_relu_backward<T>(cview(ws.trunk[bi]), slope, cview(ws.grad_b), ws.grad_b);
    for (std::size_t i = 0; i < ws.grad_trunk.size(); ++i) ws.grad_trunk[i] += ws.grad_b[i];
  }
  conv2d_backward<T>(cview(ws.input), input_shape(), cview(params_[kConvIn].value), input_conv(),
                     cview(ws.grad_trunk), std::span<T>{}, params_[kConvIn].grad,
                     params_[kConvIn + 1].grad, ws.scratch);
}

template struct Workspace<float>;
template struct Workspace<double>;
template class Network<float>;
template class Network<double>;

NetworkOutput forward(const SweiNet& net, const SpaceTimePlot& plot, Workspace<float>& ws) {
  const auto& cfg = net.config();
  if (plot.n_x() != cfg.in_x || plot.n_t() != cfg.in_t) {
    throw Error(Errc::BadShape, "plot is " + std::to_string(plot.n_x()) + "x" +
                                    std::to_string(plot.n_t()) + ", network expects " +
                                    std::to_string(cfg.in_x) + "x" + std::to_string(cfg.in_t));
  }
  return to_network_output(net.forward(plot.data(), ws));
}

std::vector<NetworkOutput> predict(const SweiNet& net, std::span<const float> inputs,
                                   std::size_t count) {
  const std::size_t stride = std::size_t{net.config().in_x} * net.config().in_t;
  if (inputs.size() != stride * count) {
    throw Error(Errc::BadShape, "packed inputs do not match count * in_x * in_t");
  }
  Workspace<float> ws(net.config());
  std::vector<NetworkOutput> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(to_network_output(net.forward(inputs.subspan(i * stride, stride), ws)));
  }
  return out;
}

}  // namespace swei::nn
