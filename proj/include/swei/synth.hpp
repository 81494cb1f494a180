#pragma once

#include <cstdint>
#include <vector>

#include "swei/rng.hpp"
#include "swei/types.hpp"

namespace swei::synth {

/// Canonical acquisition grid: 0.2 mm pitch, 5.56 kHz tracking PRF.
inline constexpr double kDefaultDx = 0.2e-3;
inline constexpr double kDefaultDt = 1.0 / 5560.0;
inline constexpr double kDefaultTau = 0.4e-3;

struct Geometry {
  std::size_t n_x = 16;
  std::size_t n_t = 64;
  double dx = kDefaultDx;
  double dt = kDefaultDt;
};

/// Plane shear wave launched at x = 0. Speeds outside [0.5, 10] m/s are
/// rejected; tau is the Gaussian pulse width in seconds.
struct WaveParams {
  double c = 2.0;
  double t0 = 2.0e-3;
  double tau = kDefaultTau;
  double alpha = 0.0;
  double refl_amp = 0.0;

  void validate() const;
};

struct NoiseParams {
  double white_sigma = 0.0;
  double offset_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Noiseless, unnormalized kernel value at lateral position x and time t.
/// Displacement uses g(s) = exp(-s^2/2); velocity its time derivative, which
/// in pulse units is g'(s) = -s exp(-s^2/2). A reflection travels back from
/// x_reflector at -c.
double wave_kernel(const WaveParams& wave, double x, double t, MotionKind kind,
                   double x_reflector);

/// Noisy, per-track normalized plot with truth = wave.c.
/// Throws DegenerateWave when no track's peak falls inside the window.
LabeledPlot gen_plot(const WaveParams& wave, const NoiseParams& noise, const Geometry& geometry,
                     MotionKind kind = MotionKind::displacement, int group_id = 0);

/// Raw (unnormalized, noiseless) plot, for checking the kernel itself.
SpaceTimePlot gen_clean_plot(const WaveParams& wave, const Geometry& geometry, MotionKind kind);

/// Group ("patient") heterogeneity. Each group draws its own noise ceiling,
/// clutter offset level, reflection level and pulse width; plots then draw
/// per-plot values inside those group ranges.
struct GroupConfig {
  std::size_t n_groups = 5;
  std::size_t plots_per_group = 100;
  std::uint64_t seed = 0;
  double c_min = 0.5;
  double c_max = 10.0;
  double white_min = 0.0;
  double white_max = 0.5;
  double offset_max = 0.1;
  double refl_max = 0.3;
  double alpha_max = 200.0;
  double tau_min = 0.35e-3;
  double tau_max = 0.45e-3;
  int first_group_id = 0;
  Geometry geometry{};
  MotionKind kind = MotionKind::displacement;

  void validate() const;
};

/// Draws c log-uniformly on [c_min, c_max].
double draw_log_uniform_speed(Rng& rng, double c_min, double c_max);

/// n_groups * plots_per_group plots ordered by group then index. Plot k of the
/// dataset is generated from derive_seed(seed, k); group g's parameters from
/// derive_seed(seed ^ kGroupStream, g).
std::vector<LabeledPlot> gen_dataset(const GroupConfig& config);

}  // namespace swei::synth
