#include "swei/synth.hpp"

#include <cmath>

#include "swei/preprocess.hpp"

namespace swei::synth {
namespace {

constexpr std::uint64_t kGroupStream = 0x67726F7570ull;  // "group"

double pulse(double s, MotionKind kind) {
  const double g = std::exp(-0.5 * s * s);
  return kind == MotionKind::displacement ? g : -s * g;
}

void check_geometry(const Geometry& g) {
  if (g.n_x < 2 || g.n_t < 8 || !(g.dx > 0.0) || !(g.dt > 0.0)) {
    throw Error(Errc::InvalidArgument, "geometry needs n_x >= 2, n_t >= 8, dx > 0, dt > 0");
  }
}

}  // namespace

void WaveParams::validate() const {
  if (!(c >= 0.5 && c <= 10.0)) {
    throw Error(Errc::InvalidArgument, "wave speed must lie in [0.5, 10] m/s");
  }
  if (!(tau > 0.0)) throw Error(Errc::InvalidArgument, "pulse width must be positive");
  if (!(alpha >= 0.0)) throw Error(Errc::InvalidArgument, "decay must be non-negative");
  if (!(refl_amp >= 0.0 && refl_amp < 1.0)) {
    throw Error(Errc::InvalidArgument, "reflection amplitude must lie in [0, 1)");
  }
  if (!std::isfinite(t0)) throw Error(Errc::InvalidArgument, "launch time must be finite");
}

double wave_kernel(const WaveParams& wave, double x, double t, MotionKind kind,
                   double x_reflector) {
  const double s = (t - wave.t0 - x / wave.c) / wave.tau;
  double u = std::exp(-wave.alpha * x) * pulse(s, kind);
  if (wave.refl_amp > 0.0) {
    const double path = 2.0 * x_reflector - x;
    const double sr = (t - wave.t0 - path / wave.c) / wave.tau;
    u += wave.refl_amp * std::exp(-wave.alpha * path) * pulse(sr, kind);
  }
  return u;
}

SpaceTimePlot gen_clean_plot(const WaveParams& wave, const Geometry& geometry, MotionKind kind) {
  wave.validate();
  check_geometry(geometry);
  const double window = static_cast<double>(geometry.n_t) * geometry.dt;
  bool any_inside = false;
  for (std::size_t ix = 0; ix < geometry.n_x; ++ix) {
    const double peak = wave.t0 + static_cast<double>(ix) * geometry.dx / wave.c;
    any_inside = any_inside || (peak >= 0.0 && peak <= window);
  }
  if (!any_inside) {
    throw Error(Errc::DegenerateWave, "wave peak lies outside the time window on every track");
  }
  const double x_reflector = static_cast<double>(geometry.n_x) * geometry.dx;
  std::vector<float> data(geometry.n_x * geometry.n_t);
  for (std::size_t ix = 0; ix < geometry.n_x; ++ix) {
    const double x = static_cast<double>(ix) * geometry.dx;
    for (std::size_t it = 0; it < geometry.n_t; ++it) {
      const double t = static_cast<double>(it) * geometry.dt;
      data[ix * geometry.n_t + it] =
          static_cast<float>(wave_kernel(wave, x, t, kind, x_reflector));
    }
  }
  return SpaceTimePlot(geometry.n_x, geometry.n_t, geometry.dx, geometry.dt, std::move(data),
                       kind);
}

LabeledPlot gen_plot(const WaveParams& wave, const NoiseParams& noise, const Geometry& geometry,
                     MotionKind kind, int group_id) {
  if (!(noise.white_sigma >= 0.0) || !(noise.offset_sigma >= 0.0)) {
    throw Error(Errc::InvalidArgument, "noise levels must be non-negative");
  }
  const SpaceTimePlot clean = gen_clean_plot(wave, geometry, kind);
  std::vector<float> data(clean.data().begin(), clean.data().end());
  if (noise.white_sigma > 0.0 || noise.offset_sigma > 0.0) {
    Rng rng(noise.seed);
    for (std::size_t ix = 0; ix < geometry.n_x; ++ix) {
      const double offset = noise.offset_sigma > 0.0 ? rng.normal(0.0, noise.offset_sigma) : 0.0;
      for (std::size_t it = 0; it < geometry.n_t; ++it) {
        const double w = noise.white_sigma > 0.0 ? rng.normal(0.0, noise.white_sigma) : 0.0;
        auto& v = data[ix * geometry.n_t + it];
        v = static_cast<float>(static_cast<double>(v) + offset + w);
      }
    }
  }
  SpaceTimePlot noisy(geometry.n_x, geometry.n_t, geometry.dx, geometry.dt, std::move(data),
                      kind);
  return LabeledPlot(preprocess::normalize_tracks(noisy).plot, wave.c, group_id,
                     LabelSource::true_speed);
}

void GroupConfig::validate() const {
  if (n_groups < 2) throw Error(Errc::InvalidArgument, "need at least 2 groups");
  if (plots_per_group == 0) throw Error(Errc::InvalidArgument, "plots_per_group must be > 0");
  if (!(c_min >= 0.5 && c_max <= 10.0 && c_min <= c_max)) {
    throw Error(Errc::InvalidArgument, "speed range must lie inside [0.5, 10] m/s");
  }
  if (!(white_min >= 0.0 && white_max >= white_min) || !(offset_max >= 0.0) ||
      !(refl_max >= 0.0 && refl_max < 1.0) || !(alpha_max >= 0.0) ||
      !(tau_min > 0.0 && tau_max >= tau_min)) {
    throw Error(Errc::InvalidArgument, "invalid noise or pulse ranges");
  }
  check_geometry(geometry);
}

double draw_log_uniform_speed(Rng& rng, double c_min, double c_max) {
  return std::exp(rng.uniform(std::log(c_min), std::log(c_max)));
}

std::vector<LabeledPlot> gen_dataset(const GroupConfig& config) {
  config.validate();
  const Geometry& geo = config.geometry;
  const double window = static_cast<double>(geo.n_t) * geo.dt;
  const double aperture = static_cast<double>(geo.n_x - 1) * geo.dx;

  std::vector<LabeledPlot> plots;
  plots.reserve(config.n_groups * config.plots_per_group);
  std::uint64_t plot_index = 0;
  for (std::size_t g = 0; g < config.n_groups; ++g) {
    Rng group_rng(derive_seed(config.seed ^ kGroupStream, g));
    // Noise ceiling between 60% and 100% of the configured maximum.
    const double white_hi =
        config.white_min + (config.white_max - config.white_min) * group_rng.uniform(0.6, 1.0);
    const double offset_sigma = group_rng.uniform(0.0, config.offset_max);
    const double refl_hi = group_rng.uniform(0.0, config.refl_max);
    const double tau = group_rng.uniform(config.tau_min, config.tau_max);
    const int group_id = config.first_group_id + static_cast<int>(g);

    for (std::size_t p = 0; p < config.plots_per_group; ++p, ++plot_index) {
      Rng rng(derive_seed(config.seed, plot_index));
      WaveParams wave;
      wave.c = draw_log_uniform_speed(rng, config.c_min, config.c_max);
      wave.tau = tau;
      wave.alpha = rng.uniform(0.0, config.alpha_max);
      wave.refl_amp = rng.uniform(0.0, refl_hi);
      const double transit = aperture / wave.c;
      const double t0_lo = 2.0 * tau;
      const double t0_hi = std::max(t0_lo, window - transit - 2.0 * tau);
      wave.t0 = rng.uniform(t0_lo, t0_hi);

      NoiseParams noise;
      noise.white_sigma = rng.uniform(config.white_min, white_hi);
      noise.offset_sigma = offset_sigma;
      noise.seed = rng.next_u64();
      plots.push_back(gen_plot(wave, noise, geo, config.kind, group_id));
    }
  }
  return plots;
}

}  // namespace swei::synth
