#include "swei/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "swei/rng.hpp"

namespace swei::classical {

LineFit fit_line(std::span<const PeakPoint> points) {
  const double n = static_cast<double>(points.size());
  double mx = 0.0, mt = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    mt += p.t;
  }
  mx /= n;
  mt /= n;
  double sxx = 0.0, sxt = 0.0, stt = 0.0;
  for (const auto& p : points) {
    sxx += (p.x - mx) * (p.x - mx);
    sxt += (p.x - mx) * (p.t - mt);
    stt += (p.t - mt) * (p.t - mt);
  }
  if (points.size() < 2 || !(sxx > 0.0)) {
    throw Error(Errc::TooFewTracks, "line fit needs two distinct positions");
  }
  LineFit fit;
  fit.slope = sxt / sxx;
  fit.intercept = mt - fit.slope * mx;
  fit.r_squared = stt > 0.0 ? std::clamp(sxt * sxt / (sxx * stt), 0.0, 1.0) : 0.0;
  return fit;
}

double parabolic_offset(double ym, double y0, double yp) noexcept {
  const double denom = ym - 2.0 * y0 + yp;
  if (!(denom < 0.0) || y0 < ym || y0 < yp) return 0.0;
  const double delta = 0.5 * (ym - yp) / denom;
  return std::clamp(delta, -0.5, 0.5);
}

std::vector<PeakPoint> ttp_points(const SpaceTimePlot& plot) {
  if (plot.kind() != MotionKind::displacement) {
    throw Error(Errc::BadKind, "time-to-peak expects displacement data");
  }
  std::vector<PeakPoint> points;
  for (std::size_t ix = 0; ix < plot.n_x(); ++ix) {
    auto track = plot.track(ix);
    const auto [lo, hi] = std::minmax_element(track.begin(), track.end());
    if (!(*hi > *lo)) continue;
    const auto m = static_cast<std::size_t>(hi - track.begin());
    double pos = static_cast<double>(m);
    if (m > 0 && m + 1 < track.size()) pos += parabolic_offset(track[m - 1], track[m], track[m + 1]);
    points.push_back({static_cast<double>(ix) * plot.dx(), pos * plot.dt()});
  }
  return points;
}

ClassicalEstimate speed_from_slope(double slope, double quality) {
  if (!std::isfinite(slope) || slope == 0.0) {
    throw Error(Errc::OutOfRange, "arrival-time slope is zero or not finite");
  }
  const double raw = 1.0 / std::abs(slope);
  ClassicalEstimate est;
  est.sws = std::clamp(raw, kMinSpeed, kMaxSpeed);
  est.clipped = est.sws != raw;
  est.quality = std::clamp(quality, 0.0, 1.0);
  return est;
}

ClassicalEstimate ttp_estimate(const SpaceTimePlot& plot) {
  const auto points = ttp_points(plot);
  if (points.size() < 3) {
    throw Error(Errc::TooFewTracks, std::to_string(points.size()) + " usable tracks, need 3");
  }
  const auto fit = fit_line(points);
  return speed_from_slope(fit.slope, fit.r_squared);
}

RansacFit ransac_fit(std::span<const PeakPoint> points, std::size_t n_iter, double inlier_tol,
                     std::uint64_t seed) {
  if (n_iter < 1) throw Error(Errc::InvalidArgument, "RANSAC needs at least one iteration");
  if (points.size() < 3) {
    throw Error(Errc::TooFewTracks, std::to_string(points.size()) + " usable tracks, need 3");
  }
  Rng rng(seed);
  std::vector<std::size_t> best;
  std::vector<std::size_t> current;
  for (std::size_t iter = 0; iter < n_iter; ++iter) {
    const auto i = static_cast<std::size_t>(rng.below(points.size()));
    auto j = static_cast<std::size_t>(rng.below(points.size() - 1));
    if (j >= i) ++j;
    const double run = points[j].x - points[i].x;
    if (run == 0.0) continue;
    const double slope = (points[j].t - points[i].t) / run;
    const double intercept = points[i].t - slope * points[i].x;
    current.clear();
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (std::abs(points[k].t - (intercept + slope * points[k].x)) <= inlier_tol) {
        current.push_back(k);
      }
    }
    if (current.size() > best.size()) best = current;
  }
  if (best.size() < 3) {
    throw Error(Errc::NoConsensus, "largest consensus set has " + std::to_string(best.size()) +
                                       " points");
  }
  std::vector<PeakPoint> consensus;
  consensus.reserve(best.size());
  for (auto k : best) consensus.push_back(points[k]);
  RansacFit result;
  result.line = fit_line(consensus);
  result.inlier_fraction = static_cast<double>(best.size()) / static_cast<double>(points.size());
  result.inliers = std::move(best);
  return result;
}

ClassicalEstimate ransac_estimate(const SpaceTimePlot& plot, const RansacParams& params) {
  const auto points = ttp_points(plot);
  const double tol = params.inlier_tol > 0.0 ? params.inlier_tol : 1.5 * plot.dt();
  const auto fit = ransac_fit(points, params.n_iter, tol, params.seed);
  return speed_from_slope(fit.line.slope, fit.inlier_fraction);
}

double xcorr_delay_samples(std::span<const float> a, std::span<const float> b, double* peak) {
  const std::size_t n = a.size();
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  std::vector<double> za(n), zb(n);
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    za[i] = a[i] - mean_a;
    zb[i] = b[i] - mean_b;
    na += za[i] * za[i];
    nb += zb[i] * zb[i];
  }
  const double norm = std::sqrt(na * nb);
  if (!(norm > 0.0)) throw Error(Errc::Degenerate, "constant track in cross-correlation");

  // Circular correlation r[lag + h] = sum_j za[j] * zb[(j + lag) mod n] for
  // |lag| <= h. Circular lags keep the autocorrelation symmetric, so an
  // exact shift is recovered exactly by the parabolic refinement.
  const auto h = static_cast<std::ptrdiff_t>((n - 1) / 2);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  std::vector<double> r(static_cast<std::size_t>(2 * h + 1));
  for (std::ptrdiff_t lag = -h; lag <= h; ++lag) {
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < sn; ++j) {
      acc += za[static_cast<std::size_t>(j)] * zb[static_cast<std::size_t>(((j + lag) % sn + sn) % sn)];
    }
    r[static_cast<std::size_t>(lag + h)] = acc / norm;
  }
  const auto best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  double pos = static_cast<double>(best);
  if (best > 0 && best + 1 < r.size()) pos += parabolic_offset(r[best - 1], r[best], r[best + 1]);
  if (peak != nullptr) *peak = r[best];
  return pos - static_cast<double>(h);
}

ClassicalEstimate xcorr_estimate(const SpaceTimePlot& plot) {
  std::vector<std::size_t> live;
  for (std::size_t ix = 0; ix < plot.n_x(); ++ix) {
    auto track = plot.track(ix);
    const auto [lo, hi] = std::minmax_element(track.begin(), track.end());
    if (*hi > *lo) live.push_back(ix);
  }
  if (live.size() < 3) {
    throw Error(Errc::TooFewTracks, std::to_string(live.size()) + " usable tracks, need 3");
  }
  std::vector<PeakPoint> points{{static_cast<double>(live[0]) * plot.dx(), 0.0}};
  double cumulative = 0.0;
  double peak_sum = 0.0;
  for (std::size_t k = 1; k < live.size(); ++k) {
    double peak = 0.0;
    cumulative += xcorr_delay_samples(plot.track(live[k - 1]), plot.track(live[k]), &peak) *
                  plot.dt();
    peak_sum += peak;
    points.push_back({static_cast<double>(live[k]) * plot.dx(), cumulative});
  }
  const auto fit = fit_line(points);
  return speed_from_slope(fit.slope, peak_sum / static_cast<double>(live.size() - 1));
}

RadonGrid RadonGrid::standard(std::size_t count) {
  RadonGrid grid;
  const double p_lo = 1.0 / kMaxSpeed;
  const double p_hi = 1.0 / kMinSpeed;
  grid.slowness.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid.slowness[k] =
        p_lo + (p_hi - p_lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return grid;
}

void RadonGrid::validate() const {
  if (slowness.size() < 3) throw Error(Errc::InvalidArgument, "Radon grid needs >= 3 slownesses");
  for (std::size_t k = 0; k < slowness.size(); ++k) {
    if (!(slowness[k] > 0.0) || (k > 0 && !(slowness[k] > slowness[k - 1]))) {
      throw Error(Errc::InvalidArgument, "Radon slowness grid must be positive and increasing");
    }
  }
}

RadonTransform radon_transform(const SpaceTimePlot& plot, const RadonGrid& grid) {
  grid.validate();
  const std::size_t n_t = plot.n_t();
  const double half_aperture = 0.5 * static_cast<double>(plot.n_x() - 1) * plot.dx();
  const double reach = half_aperture * grid.slowness.back();
  const double window = static_cast<double>(n_t - 1) * plot.dt();

  RadonTransform out;
  out.n_slowness = grid.slowness.size();
  out.intercept_step = plot.dt();
  out.intercept_start = -std::floor(reach / plot.dt()) * plot.dt();
  out.n_intercept =
      static_cast<std::size_t>(std::floor((window + reach - out.intercept_start) / plot.dt())) + 1;
  out.values.assign(2 * out.n_slowness * out.n_intercept, 0.0);

  const double last = static_cast<double>(n_t - 1);
  for (std::size_t dir = 0; dir < 2; ++dir) {
    const double sign = dir == 0 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < out.n_slowness; ++k) {
      const double p = sign * grid.slowness[k];
      double* row = out.values.data() + (dir * out.n_slowness + k) * out.n_intercept;
      for (std::size_t ix = 0; ix < plot.n_x(); ++ix) {
        auto track = plot.track(ix);
        const double offset =
            (static_cast<double>(ix) * plot.dx() - half_aperture) * p / plot.dt();
        const double start = out.intercept_start / plot.dt() + offset;
        for (std::size_t c = 0; c < out.n_intercept; ++c) {
          const double pos = start + static_cast<double>(c);
          if (pos < 0.0 || pos > last) continue;
          const auto i = std::min(static_cast<std::size_t>(pos), n_t - 2);
          const double frac = pos - static_cast<double>(i);
          // Catmull-Rom cubic; linear interpolation would favor lines through
          // sample points and bias fast (nearly flat) trajectories.
          const double y0 = track[i > 0 ? i - 1 : 0];
          const double y1 = track[i];
          const double y2 = track[i + 1];
          const double y3 = track[std::min(i + 2, n_t - 1)];
          row[c] += y1 + 0.5 * frac *
                             (y2 - y0 + frac * (2.0 * y0 - 5.0 * y1 + 4.0 * y2 - y3 +
                                                frac * (3.0 * (y1 - y2) + y3 - y0)));
        }
      }
    }
  }
  return out;
}

ClassicalEstimate radon_estimate(const SpaceTimePlot& plot, const RadonGrid& grid) {
  const auto rt = radon_transform(plot, grid);
  const auto [lo, hi] = std::minmax_element(rt.values.begin(), rt.values.end());
  if (!(*hi > *lo)) throw Error(Errc::Degenerate, "Radon transform is constant");
  const double mean =
      std::accumulate(rt.values.begin(), rt.values.end(), 0.0) / static_cast<double>(rt.values.size());

  const auto flat = static_cast<std::size_t>(hi - rt.values.begin());
  const std::size_t dir = flat / (rt.n_slowness * rt.n_intercept);

  // Profile over slowness: parabolic peak over intercept for each slowness in
  // that direction, so intercept quantization does not bias the slowness.
  std::vector<double> profile(rt.n_slowness);
  for (std::size_t k = 0; k < rt.n_slowness; ++k) {
    const double* row = rt.values.data() + (dir * rt.n_slowness + k) * rt.n_intercept;
    const auto i = static_cast<std::size_t>(std::max_element(row, row + rt.n_intercept) - row);
    profile[k] = row[i];
    if (i > 0 && i + 1 < rt.n_intercept) {
      const double curv = row[i - 1] - 2.0 * row[i] + row[i + 1];
      if (curv < 0.0) profile[k] -= (row[i + 1] - row[i - 1]) * (row[i + 1] - row[i - 1]) / (8.0 * curv);
    }
  }
  const std::size_t k = (flat / rt.n_intercept) % rt.n_slowness;
  double p = grid.slowness[k];
  if (k > 0 && k + 1 < rt.n_slowness) {
    const double delta = parabolic_offset(profile[k - 1], profile[k], profile[k + 1]);
    const double step = delta < 0.0 ? p - grid.slowness[k - 1] : grid.slowness[k + 1] - p;
    p += delta * step;
  }
  return speed_from_slope(p, (*hi - mean) / (*hi - *lo));
}

double mix_labels(double a, double b, std::uint64_t seed) {
  Rng rng(seed);
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double draw = lo == hi ? lo : rng.uniform(lo, hi);
  return std::clamp(draw, kMinSpeed, kMaxSpeed);
}

double mixed_label(const SpaceTimePlot& plot, std::uint64_t seed) {
  double radon = 0.0, xcorr = 0.0;
  try {
    radon = radon_estimate(plot, RadonGrid::standard()).sws;
    xcorr = xcorr_estimate(plot).sws;
  } catch (const Error& e) {
    throw Error(Errc::LabelUnavailable, e.what());
  }
  return mix_labels(radon, xcorr, seed);
}

}  // namespace swei::classical
