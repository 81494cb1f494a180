#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swei/error.hpp"

namespace swei {

/// Lowest and highest speed (m/s) any label or classical estimate may take.
inline constexpr double kMinSpeed = 0.5;
inline constexpr double kMaxSpeed = 12.0;

enum class MotionKind : std::uint16_t { displacement = 0, velocity = 1 };

/// Tracked motion over lateral position x time. Row-major with the lateral
/// index outermost: value(ix, it) = data[ix * n_t + it]. Immutable.
class SpaceTimePlot {
 public:
  /// Throws InvalidArgument on bad shape or pitch, NonFiniteData on NaN/Inf.
  SpaceTimePlot(std::size_t n_x, std::size_t n_t, double dx, double dt,
                std::vector<float> data, MotionKind kind = MotionKind::displacement);

  std::size_t n_x() const noexcept { return n_x_; }
  std::size_t n_t() const noexcept { return n_t_; }
  double dx() const noexcept { return dx_; }
  double dt() const noexcept { return dt_; }
  MotionKind kind() const noexcept { return kind_; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> track(std::size_t ix) const noexcept {
    return std::span<const float>(data_).subspan(ix * n_t_, n_t_);
  }
  float at(std::size_t ix, std::size_t it) const noexcept { return data_[ix * n_t_ + it]; }

  /// Bit-level equality of every field, including the sign of zeros.
  bool bitwise_equal(const SpaceTimePlot& other) const noexcept;

 private:
  std::size_t n_x_;
  std::size_t n_t_;
  double dx_;
  double dt_;
  std::vector<float> data_;
  MotionKind kind_;
};

enum class LabelSource { true_speed, radon, xcorr, mixed };

std::string_view to_string(LabelSource source) noexcept;
LabelSource label_source_from_string(std::string_view text);

/// A plot with its ground-truth speed, clipped into [kMinSpeed, kMaxSpeed].
struct LabeledPlot {
  LabeledPlot(SpaceTimePlot plot_, double truth_, int group_id_,
              LabelSource source_ = LabelSource::true_speed);

  SpaceTimePlot plot;
  double truth;
  int group_id;
  LabelSource label_source;
};

/// Raw network head: mu = log m, s = log sigma^2.
struct NetworkOutput {
  double mu = 0.0;
  double s = 0.0;
};

/// Log-normal speed estimate parameterized by its median m and log-domain std sigma.
class LogNormalSpeed {
 public:
  LogNormalSpeed(double m, double sigma);

  double m() const noexcept { return m_; }
  double sigma() const noexcept { return sigma_; }
  double rel_unc() const noexcept;
  double abs_unc() const noexcept { return m_ * rel_unc(); }

 private:
  double m_;
  double sigma_;
};

/// Network hyper-shape. The 5x5 unpadded input convolution and the (3, 6)
/// non-overlapping pooling must tile the input exactly.
struct NetConfig {
  static constexpr std::uint32_t kPoolX = 3;
  static constexpr std::uint32_t kPoolT = 6;
  static constexpr std::uint32_t kInputKernel = 5;

  std::uint32_t in_x = 16;
  std::uint32_t in_t = 64;
  std::uint32_t channels = 32;
  float leaky_slope = 0.01f;

  /// Throws BadConfig when the shape does not tile.
  void validate() const;
  std::uint32_t conv_x() const noexcept { return in_x - (kInputKernel - 1); }
  std::uint32_t conv_t() const noexcept { return in_t - (kInputKernel - 1); }
  std::uint32_t pooled_x() const noexcept { return conv_x() / kPoolX; }
  std::uint32_t pooled_t() const noexcept { return conv_t() / kPoolT; }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

/// Ordered parameter set of a network plus the configuration that shapes it.
struct ModelWeights {
  NetConfig config;
  std::vector<NamedTensor> tensors;

  /// Throws DuplicateName, SizeMismatch or NonFiniteData.
  void validate() const;
  const NamedTensor* find(std::string_view name) const noexcept;
  bool bitwise_equal(const ModelWeights& other) const noexcept;
};

}  // namespace swei
