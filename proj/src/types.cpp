#include "swei/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

namespace swei {

SpaceTimePlot::SpaceTimePlot(std::size_t n_x, std::size_t n_t, double dx, double dt,
                             std::vector<float> data, MotionKind kind)
    : n_x_(n_x), n_t_(n_t), dx_(dx), dt_(dt), data_(std::move(data)), kind_(kind) {
  if (n_x < 2 || n_t < 8) {
    throw Error(Errc::InvalidArgument, "plot needs n_x >= 2 and n_t >= 8, got " +
                                           std::to_string(n_x) + "x" + std::to_string(n_t));
  }
  if (!(dx > 0.0) || !(dt > 0.0) || !std::isfinite(dx) || !std::isfinite(dt)) {
    throw Error(Errc::InvalidArgument, "plot sampling intervals must be positive");
  }
  if (data_.size() != n_x * n_t) {
    throw Error(Errc::SizeMismatch, "plot data length " + std::to_string(data_.size()) +
                                        " != n_x*n_t " + std::to_string(n_x * n_t));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); })) {
    throw Error(Errc::NonFiniteData, "plot contains NaN or Inf");
  }
}

bool SpaceTimePlot::bitwise_equal(const SpaceTimePlot& other) const noexcept {
  return n_x_ == other.n_x_ && n_t_ == other.n_t_ && kind_ == other.kind_ &&
         std::memcmp(&dx_, &other.dx_, sizeof dx_) == 0 &&
         std::memcmp(&dt_, &other.dt_, sizeof dt_) == 0 &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

std::string_view to_string(LabelSource source) noexcept {
  switch (source) {
    case LabelSource::true_speed: return "true_speed";
    case LabelSource::radon: return "radon";
    case LabelSource::xcorr: return "xcorr";
    case LabelSource::mixed: return "mixed";
  }
  return "true_speed";
}

LabelSource label_source_from_string(std::string_view text) {
  for (auto s : {LabelSource::true_speed, LabelSource::radon, LabelSource::xcorr,
                 LabelSource::mixed}) {
    if (text == to_string(s)) return s;
  }
  throw Error(Errc::MalformedCsv, "unknown label source '" + std::string(text) + "'");
}

LabeledPlot::LabeledPlot(SpaceTimePlot plot_, double truth_, int group_id_, LabelSource source_)
    : plot(std::move(plot_)), truth(truth_), group_id(group_id_), label_source(source_) {
  if (!std::isfinite(truth) || truth <= 0.0) {
    throw Error(Errc::BadLabel, "label must be positive and finite");
  }
  truth = std::clamp(truth, kMinSpeed, kMaxSpeed);
}

LogNormalSpeed::LogNormalSpeed(double m, double sigma) : m_(m), sigma_(sigma) {
  if (!(m > 0.0) || !std::isfinite(m)) throw Error(Errc::InvalidArgument, "median must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(Errc::InvalidArgument, "sigma must be >= 0");
  }
}

double LogNormalSpeed::rel_unc() const noexcept { return std::sinh(sigma_); }

void NetConfig::validate() const {
  if (in_x < kInputKernel + 1 || in_t < kInputKernel + 1) {
    throw Error(Errc::BadConfig, "input shape smaller than the input kernel");
  }
  if (conv_x() % kPoolX != 0 || conv_t() % kPoolT != 0) {
    throw Error(Errc::BadConfig, "(in_x-4) must be divisible by 3 and (in_t-4) by 6, got " +
                                     std::to_string(in_x) + "x" + std::to_string(in_t));
  }
  if (channels == 0) throw Error(Errc::BadConfig, "channels must be positive");
  if (!std::isfinite(leaky_slope) || leaky_slope < 0.0f || leaky_slope >= 1.0f) {
    throw Error(Errc::BadConfig, "leaky slope must lie in [0, 1)");
  }
}

void ModelWeights::validate() const {
  config.validate();
  std::set<std::string_view> seen;
  for (const auto& t : tensors) {
    if (!seen.insert(t.name).second) {
      throw Error(Errc::DuplicateName, "tensor '" + t.name + "' appears twice");
    }
    std::size_t count = 1;
    for (auto d : t.dims) count *= d;
    if (count != t.values.size()) {
      throw Error(Errc::SizeMismatch, "tensor '" + t.name + "' has " +
                                          std::to_string(t.values.size()) + " values, dims say " +
                                          std::to_string(count));
    }
    if (!std::all_of(t.values.begin(), t.values.end(), [](float v) { return std::isfinite(v); })) {
      throw Error(Errc::NonFiniteData, "tensor '" + t.name + "' is not finite");
    }
  }
}

const NamedTensor* ModelWeights::find(std::string_view name) const noexcept {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

bool ModelWeights::bitwise_equal(const ModelWeights& other) const noexcept {
  if (std::memcmp(&config.leaky_slope, &other.config.leaky_slope, sizeof(float)) != 0 ||
      config.in_x != other.config.in_x || config.in_t != other.config.in_t ||
      config.channels != other.config.channels || tensors.size() != other.tensors.size()) {
    return false;
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& a = tensors[i];
    const auto& b = other.tensors[i];
    if (a.name != b.name || a.dims != b.dims || a.values.size() != b.values.size()) return false;
    if (std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace swei
