#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swei/types.hpp"

namespace swei::classical {

/// Speed estimate plus a method-specific quality in [0, 1]: R^2 for
/// time-to-peak, inlier fraction for RANSAC, mean adjacent peak correlation
/// for cross-correlation, normalized peak prominence for Radon.
struct ClassicalEstimate {
  double sws = 0.0;
  double quality = 0.0;
  /// Set when the raw speed fell outside [kMinSpeed, kMaxSpeed] and was clipped.
  bool clipped = false;
};

/// Arrival time of the wave at one lateral position.
struct PeakPoint {
  double x = 0.0;
  double t = 0.0;
};

/// t = intercept + slope * x.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares; needs two distinct x values.
LineFit fit_line(std::span<const PeakPoint> points);

/// Vertex offset in (-1, 1) of the parabola through (-1, ym), (0, y0), (1, yp);
/// 0 when the three points are not a strict local maximum.
double parabolic_offset(double ym, double y0, double yp) noexcept;

/// Per-track peak time (argmax + parabolic refinement) for every non-constant
/// track. Requires displacement data.
std::vector<PeakPoint> ttp_points(const SpaceTimePlot& plot);

/// Speed = 1 / |slope| so left- and right-moving waves both give a positive speed.
/// Throws OutOfRange when the fitted slope is zero.
ClassicalEstimate speed_from_slope(double slope, double quality);

ClassicalEstimate ttp_estimate(const SpaceTimePlot& plot);

struct RansacParams {
  std::size_t n_iter = 200;
  /// Seconds; a non-positive value means 1.5 * dt of the plot.
  double inlier_tol = 0.0;
  std::uint64_t seed = 0;
};

struct RansacFit {
  LineFit line;
  std::vector<std::size_t> inliers;
  double inlier_fraction = 0.0;
};

/// Sample two points n_iter times, keep the largest consensus set, then refit
/// least squares on it. Throws NoConsensus below 3 inliers.
RansacFit ransac_fit(std::span<const PeakPoint> points, std::size_t n_iter, double inlier_tol,
                     std::uint64_t seed);

ClassicalEstimate ransac_estimate(const SpaceTimePlot& plot, const RansacParams& params);

/// Delay of `b` relative to `a` in samples from the circular normalized
/// cross-correlation of the mean-removed tracks (lags up to (n-1)/2), with
/// parabolic refinement. `peak` receives the peak
/// correlation coefficient.
double xcorr_delay_samples(std::span<const float> a, std::span<const float> b, double* peak);

ClassicalEstimate xcorr_estimate(const SpaceTimePlot& plot);

/// Trajectories t(x) = t_c + (x - x_c) * p for every slowness p on the grid
/// (both propagation directions) and every intercept t_c, with x_c the
/// aperture center. Intercepts step by dt and cover every line that crosses
/// the plot.
struct RadonGrid {
  std::vector<double> slowness;

  /// 240 values linear in slowness spanning speeds [0.5, 12] m/s.
  static RadonGrid standard(std::size_t count = 240);
  void validate() const;
};

struct RadonTransform {
  std::size_t n_slowness = 0;
  std::size_t n_intercept = 0;
  double intercept_start = 0.0;
  double intercept_step = 0.0;
  /// [direction (0: +p, 1: -p)][slowness][intercept]
  std::vector<double> values;
};

RadonTransform radon_transform(const SpaceTimePlot& plot, const RadonGrid& grid);

ClassicalEstimate radon_estimate(const SpaceTimePlot& plot, const RadonGrid& grid);

/// Uniform draw between two estimates, clipped to the label range.
double mix_labels(double a, double b, std::uint64_t seed);

/// Random value between the Radon and cross-correlation speeds.
/// Throws LabelUnavailable if either estimator fails.
double mixed_label(const SpaceTimePlot& plot, std::uint64_t seed);

}  // namespace swei::classical
