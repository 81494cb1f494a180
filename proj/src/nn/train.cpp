#include "swei/nn/train.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "swei/rng.hpp"
#include "swei/uq.hpp"

namespace swei::nn {
namespace {

constexpr double kWarmupFraction = 0.3;
constexpr double kStartDivisor = 25.0;
constexpr double kFinalDivisor = 1e4;

double cosine_between(double from, double to, double progress) {
  return to + (from - to) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0 || epochs == 0 || !(peak_lr > 0.0) || !(weight_decay >= 0.0)) {
    throw Error(Errc::BadConfig, "batch size, epochs and learning rate must be positive");
  }
}

double onecycle_lr(std::size_t step, std::size_t total_steps, double peak_lr) {
  if (step >= total_steps) {
    throw Error(Errc::BadStep, "step " + std::to_string(step) + " outside [0, " +
                                   std::to_string(total_steps) + ")");
  }
  const double warmup = kWarmupFraction * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  const double start = peak_lr / kStartDivisor;
  const double final_lr = peak_lr / kFinalDivisor;
  if (s < warmup) return cosine_between(start, peak_lr, s / warmup);
  const double span = static_cast<double>(total_steps - 1) - warmup;
  if (!(span > 0.0)) return peak_lr;
  return cosine_between(peak_lr, final_lr, (s - warmup) / span);
}

void adam_step(std::span<Parameter<float>> params, AdamState& state, double lr,
               double weight_decay, bool freeze_weights) {
  if (state.m.size() != params.size()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].value.size(), 0.0);
      state.v[i].assign(params[i].value.size(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (freeze_weights && p.decay) continue;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.value.size()) {
      throw Error(Errc::SizeMismatch, "optimizer state does not match '" + p.name + "'");
    }
    const double shrink = p.decay ? 1.0 - lr * weight_decay : 1.0;
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      double w = static_cast<double>(p.value[j]);
      if (p.decay) w = static_cast<double>(static_cast<float>(w * shrink));
      m[j] = kAdamBeta1 * m[j] + (1.0 - kAdamBeta1) * g;
      v[j] = kAdamBeta2 * v[j] + (1.0 - kAdamBeta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p.value[j] = static_cast<float>(w - lr * m_hat / (std::sqrt(v_hat) + kAdamEps));
    }
  }
}

TrainingSet make_training_set(std::span<const LabeledPlot> plots, const NetConfig& config) {
  config.validate();
  TrainingSet set;
  set.sample_size = std::size_t{config.in_x} * config.in_t;
  set.inputs.reserve(plots.size() * set.sample_size);
  set.labels.reserve(plots.size());
  for (const auto& lp : plots) {
    if (lp.plot.n_x() != config.in_x || lp.plot.n_t() != config.in_t) {
      throw Error(Errc::BadShape, "training plot is " + std::to_string(lp.plot.n_x()) + "x" +
                                      std::to_string(lp.plot.n_t()));
    }
    if (!(lp.truth > 0.0)) throw Error(Errc::BadLabel, "label must be positive");
    set.inputs.insert(set.inputs.end(), lp.plot.data().begin(), lp.plot.data().end());
    set.labels.push_back(lp.truth);
  }
  return set;
}

double batch_loss_and_grad(Network<float>& net, const TrainingSet& data,
                           std::span<const std::size_t> indices, Workspace<float>& ws) {
  const double scale = 1.0 / static_cast<double>(indices.size());
  double total = 0.0;
  for (std::size_t idx : indices) {
    const auto raw = net.forward(data.input(idx), ws);
    const double s = uq::clamp_log_var(raw.s_raw);
    const auto lg = lognormal_loss_grad<double>(raw.mu, s, std::log(data.labels[idx]));
    if (!std::isfinite(lg.loss)) {
      throw Error(Errc::NanLoss, "non-finite loss on sample " + std::to_string(idx));
    }
    total += lg.loss;
    const double d_s = clamp_backward(raw.s_raw, uq::kMinLogVar, uq::kMaxLogVar, lg.d_s);
    net.backward(static_cast<float>(lg.d_mu * scale), static_cast<float>(d_s * scale), ws);
  }
  return total * scale;
}

double mean_loss(const Network<float>& net, const TrainingSet& data) {
  Workspace<float> ws(net.config());
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto out = to_network_output(net.forward(data.input(i), ws));
    total += uq::lognormal_loss(out.mu, out.s, data.labels[i]);
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(const TrainingSet& data, const ModelWeights& initial, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw Error(Errc::EmptyInput, "training set is empty");
  Network<float> net(initial);
  if (data.sample_size != std::size_t{net.config().in_x} * net.config().in_t) {
    throw Error(Errc::BadShape, "training inputs do not match the network input shape");
  }
  Workspace<float> ws(net.config());
  AdamState adam;

  const std::size_t n = data.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  std::vector<std::size_t> order(n);

  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, epoch + 1));
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    double lr = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++step) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      net.zero_grad();
      double loss = 0.0;
      try {
        loss = batch_loss_and_grad(net, data, batch, ws);
      } catch (const Error& e) {
        if (e.code() != Errc::NanLoss) throw;
        throw Error(Errc::NanLoss, "step " + std::to_string(step) + ", epoch " +
                                       std::to_string(epoch) + ": " + e.what());
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      lr = onecycle_lr(step, total_steps, config.peak_lr);
      adam_step(net.parameters(), adam, lr, config.weight_decay, config.freeze_weights);
    }
    result.trace.push_back({epoch + 1, epoch_loss / static_cast<double>(n), lr});
  }
  result.weights = net.weights();
  return result;
}

TrainResult train(const TrainingSet& data, const NetConfig& net, const TrainConfig& config) {
  return train(data, init_model(net, derive_seed(config.seed, 0)), config);
}

}  // namespace swei::nn
