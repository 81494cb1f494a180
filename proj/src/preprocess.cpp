#include "swei/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace swei::preprocess {

void SamplingRef::validate() const {
  if (!(dx0 > 0.0) || !(dt0 > 0.0)) {
    throw Error(Errc::InvalidArgument, "reference sampling intervals must be positive");
  }
}

std::size_t NormalizedPlot::dead_count() const noexcept {
  return static_cast<std::size_t>(std::count(dead_tracks.begin(), dead_tracks.end(), true));
}

NormalizedPlot normalize_tracks(const SpaceTimePlot& plot) {
  const std::size_t n_t = plot.n_t();
  std::vector<float> out(plot.data().size());
  std::vector<bool> dead(plot.n_x(), false);
  for (std::size_t ix = 0; ix < plot.n_x(); ++ix) {
    auto track = plot.track(ix);
    const auto [lo_it, hi_it] = std::minmax_element(track.begin(), track.end());
    const double lo = *lo_it;
    const double range = static_cast<double>(*hi_it) - lo;
    float* dst = out.data() + ix * n_t;
    if (!(range > 0.0)) {
      dead[ix] = true;
      std::fill(dst, dst + n_t, 0.0f);
      continue;
    }
    for (std::size_t it = 0; it < n_t; ++it) {
      dst[it] = static_cast<float>((static_cast<double>(track[it]) - lo) / range);
    }
  }
  return {SpaceTimePlot(plot.n_x(), n_t, plot.dx(), plot.dt(), std::move(out), plot.kind()),
          std::move(dead)};
}

std::vector<double> hilbert_imag(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n < 8) throw Error(Errc::TooShort, "analytic signal needs at least 8 samples");

  std::vector<double> cos_table(n), sin_table(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    cos_table[k] = std::cos(angle);
    sin_table[k] = std::sin(angle);
  }

  // Forward DFT, X[k] = sum x[j] exp(-i 2 pi jk / n), followed by the mask.
  std::vector<std::complex<double>> spectrum(n);
  for (std::size_t k = 0; k < n; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t idx = (j * k) % n;
      re += signal[j] * cos_table[idx];
      im -= signal[j] * sin_table[idx];
    }
    double weight = 0.0;
    if (k == 0 || (n % 2 == 0 && k == n / 2)) {
      weight = 1.0;
    } else if (k < (n + 1) / 2) {
      weight = 2.0;
    }
    spectrum[k] = {re * weight, im * weight};
  }

  // Imaginary part of the inverse DFT.
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = (j * k) % n;
      im += spectrum[k].imag() * cos_table[idx] + spectrum[k].real() * sin_table[idx];
    }
    out[j] = im / static_cast<double>(n);
  }
  return out;
}

SpaceTimePlot hilbert_shift(const SpaceTimePlot& plot) {
  if (plot.kind() != MotionKind::velocity) {
    throw Error(Errc::BadKind, "phase shift expects velocity data");
  }
  const std::size_t n_t = plot.n_t();
  std::vector<float> out(plot.data().size());
  std::vector<double> track(n_t);
  for (std::size_t ix = 0; ix < plot.n_x(); ++ix) {
    auto src = plot.track(ix);
    std::copy(src.begin(), src.end(), track.begin());
    const auto shifted = hilbert_imag(track);
    std::transform(shifted.begin(), shifted.end(), out.begin() + ix * n_t,
                   [](double v) { return static_cast<float>(v); });
  }
  return SpaceTimePlot(plot.n_x(), n_t, plot.dx(), plot.dt(), std::move(out),
                       MotionKind::displacement);
}

namespace {

// Linear interpolation of `src` at fractional index pos in [0, n-1].
double lerp_at(std::span<const float> src, double pos) {
  const std::size_t last = src.size() - 1;
  if (pos <= 0.0) return src[0];
  if (pos >= static_cast<double>(last)) return src[last];
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return static_cast<double>(src[i]) +
         frac * (static_cast<double>(src[i + 1]) - static_cast<double>(src[i]));
}

SpaceTimePlot resample_time_impl(const SpaceTimePlot& plot, std::size_t new_n_t, double step,
                                 double new_dt) {
  std::vector<float> out(plot.n_x() * new_n_t);
  for (std::size_t ix = 0; ix < plot.n_x(); ++ix) {
    auto track = plot.track(ix);
    for (std::size_t it = 0; it < new_n_t; ++it) {
      out[ix * new_n_t + it] = static_cast<float>(lerp_at(track, static_cast<double>(it) * step));
    }
  }
  return SpaceTimePlot(plot.n_x(), new_n_t, plot.dx(), new_dt, std::move(out), plot.kind());
}

}  // namespace

SpaceTimePlot resample_time(const SpaceTimePlot& plot, double factor) {
  if (!(factor >= 0.25 && factor <= 8.0)) {
    throw Error(Errc::InvalidArgument, "temporal resampling factor must lie in [1/4, 8]");
  }
  const auto new_n_t =
      static_cast<std::size_t>(std::floor(static_cast<double>(plot.n_t() - 1) * factor)) + 1;
  if (new_n_t < 8) throw Error(Errc::TooShort, "resampled plot would have fewer than 8 samples");
  if (factor == 1.0) return plot;
  return resample_time_impl(plot, new_n_t, 1.0 / factor, plot.dt() / factor);
}

SpaceTimePlot resample_time_to(const SpaceTimePlot& plot, std::size_t new_n_t) {
  if (new_n_t < 8) throw Error(Errc::TooShort, "resampled plot would have fewer than 8 samples");
  if (new_n_t == plot.n_t()) return plot;
  const double step =
      static_cast<double>(plot.n_t() - 1) / static_cast<double>(new_n_t - 1);
  return resample_time_impl(plot, new_n_t, step, plot.dt() * step);
}

SpaceTimePlot resample_lateral(const SpaceTimePlot& plot, std::size_t new_n_x) {
  if (new_n_x < 2) throw Error(Errc::InvalidArgument, "need at least 2 tracks");
  if (new_n_x == plot.n_x()) return plot;
  const std::size_t n_t = plot.n_t();
  const double step =
      static_cast<double>(plot.n_x() - 1) / static_cast<double>(new_n_x - 1);
  std::vector<float> out(new_n_x * n_t);
  for (std::size_t ix = 0; ix < new_n_x; ++ix) {
    const double pos = static_cast<double>(ix) * step;
    const auto i0 = std::min(static_cast<std::size_t>(pos), plot.n_x() - 2);
    const double frac = pos - static_cast<double>(i0);
    auto a = plot.track(i0);
    auto b = plot.track(i0 + 1);
    for (std::size_t it = 0; it < n_t; ++it) {
      out[ix * n_t + it] = static_cast<float>(
          static_cast<double>(a[it]) +
          frac * (static_cast<double>(b[it]) - static_cast<double>(a[it])));
    }
  }
  return SpaceTimePlot(new_n_x, n_t, plot.dx() * step, plot.dt(), std::move(out), plot.kind());
}

SpaceTimePlot crop_time(const SpaceTimePlot& plot, std::size_t start, std::size_t length) {
  if (start + length > plot.n_t()) {
    throw Error(Errc::InvalidArgument, "crop window exceeds the plot");
  }
  std::vector<float> out(plot.n_x() * length);
  for (std::size_t ix = 0; ix < plot.n_x(); ++ix) {
    auto track = plot.track(ix).subspan(start, length);
    std::copy(track.begin(), track.end(), out.begin() + ix * length);
  }
  return SpaceTimePlot(plot.n_x(), length, plot.dx(), plot.dt(), std::move(out), plot.kind());
}

double apparent_speed_factor(const SpaceTimePlot& plot, const SamplingRef& ref) {
  ref.validate();
  return (plot.dx() / ref.dx0) * (ref.dt0 / plot.dt());
}

}  // namespace swei::preprocess
