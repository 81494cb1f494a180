#pragma once

#include <vector>

#include "swei/synth.hpp"
#include "swei/types.hpp"

namespace swei::preprocess {

/// Sampling grid the network was trained on (subscript-0 quantities).
struct SamplingRef {
  double dx0 = synth::kDefaultDx;
  double dt0 = synth::kDefaultDt;

  void validate() const;
};

struct NormalizedPlot {
  SpaceTimePlot plot;
  /// true where the input track was constant and was mapped to zeros.
  std::vector<bool> dead_tracks;

  std::size_t dead_count() const noexcept;
};

/// Rescales every track to [0, 1] independently (min -> 0, max -> 1).
NormalizedPlot normalize_tracks(const SpaceTimePlot& plot);

/// Imaginary part of the discrete analytic signal of every track: a 90 degree
/// phase shift turning velocity data into displacement-like data.
///
/// Mask convention: DC and (for even n_t) Nyquist bins keep weight 1, positive
/// frequencies weight 2, negative frequencies 0. The DFT is evaluated directly
/// in double precision so results do not depend on an FFT planner.
SpaceTimePlot hilbert_shift(const SpaceTimePlot& plot);

/// Same transform on a single real sequence.
std::vector<double> hilbert_imag(std::span<const double> signal);

/// Linear interpolation along time by `factor` in [1/4, 8]:
/// n_t' = floor((n_t - 1) * factor) + 1, dt' = dt / factor.
SpaceTimePlot resample_time(const SpaceTimePlot& plot, double factor);

/// Linear interpolation along the lateral axis to exactly n_x' tracks spanning
/// the same aperture, so dx' = dx (n_x - 1) / (n_x' - 1).
SpaceTimePlot resample_lateral(const SpaceTimePlot& plot, std::size_t new_n_x);

/// Linear interpolation along time to exactly n_t' samples over the same span.
SpaceTimePlot resample_time_to(const SpaceTimePlot& plot, std::size_t new_n_t);

/// Cuts `length` consecutive samples starting at `start` from every track.
SpaceTimePlot crop_time(const SpaceTimePlot& plot, std::size_t start, std::size_t length);

/// (dx / dt) (dt0 / dx0): multiply a speed read off this plot's grid by this
/// factor to obtain the physical speed.
double apparent_speed_factor(const SpaceTimePlot& plot, const SamplingRef& ref);

}  // namespace swei::preprocess
