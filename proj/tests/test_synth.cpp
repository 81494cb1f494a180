#include <algorithm>
#include <cmath>
#include <set>

#include "swei/synth.hpp"
#include "test_util.hpp"

using namespace swei;
using namespace swei::synth;
using swei::test::check_errc;

namespace {

// Asymptotic Kolmogorov distribution tail with the Stephens small-sample correction.
double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

std::size_t argmax(std::span<const float> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("noiseless displacement peaks sit on the wavefront") {
  const Geometry geo;
  for (double c : {0.7, 2.0, 5.0, 9.5}) {
    WaveParams w;
    w.c = c;
    w.t0 = 1.5e-3;
    const auto lp = gen_plot(w, NoiseParams{}, geo);
    CHECK(lp.truth == c);
    for (std::size_t ix = 0; ix < geo.n_x; ++ix) {
      const double expected = w.t0 + static_cast<double>(ix) * geo.dx / c;
      if (expected > (geo.n_t - 1) * geo.dt) continue;
      const double t = static_cast<double>(argmax(lp.plot.track(ix))) * geo.dt;
      CHECK(std::abs(t - expected) <= geo.dt / 2 + 1e-12);
    }
  }
}

TEST_CASE("tracks are normalized to [0, 1] for any seed") {
  Rng rng(4);
  for (int i = 0; i < 40; ++i) {
    WaveParams w;
    w.c = draw_log_uniform_speed(rng, 0.5, 10.0);
    w.t0 = rng.uniform(1e-3, 4e-3);
    w.alpha = rng.uniform(0.0, 200.0);
    w.refl_amp = rng.uniform(0.0, 0.3);
    const NoiseParams n{rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.1), rng.next_u64()};
    const auto kind = i % 2 ? MotionKind::velocity : MotionKind::displacement;
    const auto lp = gen_plot(w, n, Geometry{}, kind);
    CHECK(lp.plot.kind() == kind);
    for (std::size_t ix = 0; ix < lp.plot.n_x(); ++ix) {
      const auto tr = lp.plot.track(ix);
      const auto [lo, hi] = std::minmax_element(tr.begin(), tr.end());
      CHECK(*lo >= 0.0f);
      CHECK(*hi <= 1.0f);
    }
  }
}

TEST_CASE("same parameters and seed give identical plots") {
  WaveParams w;
  w.c = 3.3;
  w.refl_amp = 0.2;
  w.alpha = 50;
  const NoiseParams n{0.3, 0.05, 99};
  const auto a = gen_plot(w, n, Geometry{});
  const auto b = gen_plot(w, n, Geometry{});
  CHECK(a.plot.bitwise_equal(b.plot));
  const auto c = gen_plot(w, NoiseParams{0.3, 0.05, 100}, Geometry{});
  CHECK_FALSE(a.plot.bitwise_equal(c.plot));
}

TEST_CASE("noiseless displacement is a shifted, attenuated copy of the first track") {
  WaveParams w;
  w.c = 1.7;
  w.alpha = 120.0;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(0.0, 3e-3);
    const double t = rng.uniform(0.0, 1.2e-2);
    const double lhs = wave_kernel(w, x, t, MotionKind::displacement, 1.0);
    const double rhs = wave_kernel(w, 0.0, t - x / w.c, MotionKind::displacement, 1.0) *
                       std::exp(-w.alpha * x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("velocity kernel is the time derivative of displacement") {
  WaveParams w;
  w.c = 2.5;
  w.alpha = 40.0;
  w.refl_amp = 0.25;
  const double x_r = 16 * kDefaultDx;
  const double h = 1e-7;
  double peak = 0.0;
  double worst = 0.0;
  for (int ix = 0; ix < 16; ++ix) {
    const double x = ix * kDefaultDx;
    for (int it = 0; it < 4000; ++it) {
      const double t = it * 3e-6;
      const double fd = (wave_kernel(w, x, t + h, MotionKind::displacement, x_r) -
                         wave_kernel(w, x, t - h, MotionKind::displacement, x_r)) /
                        (2 * h) * w.tau;
      const double v = wave_kernel(w, x, t, MotionKind::velocity, x_r);
      peak = std::max(peak, std::abs(v));
      worst = std::max(worst, std::abs(v - fd));
    }
  }
  CHECK(worst < 1e-3 * peak);
}

TEST_CASE("wave outside the window is rejected") {
  WaveParams w;
  w.t0 = 1.0;
  check_errc([&] { gen_plot(w, NoiseParams{}, Geometry{}); }, Errc::DegenerateWave);
  w.t0 = 2e-3;
  w.c = 11.0;
  check_errc([&] { gen_plot(w, NoiseParams{}, Geometry{}); }, Errc::InvalidArgument);
}

TEST_CASE("dataset counting and group ids") {
  GroupConfig cfg;
  cfg.n_groups = 3;
  cfg.plots_per_group = 10;
  cfg.seed = 5;
  const auto ds = gen_dataset(cfg);
  REQUIRE(ds.size() == 30);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(ds[i].group_id == static_cast<int>(i / 10));
  cfg.seed = 6;
  const auto other = gen_dataset(cfg);
  std::size_t same = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) same += ds[i].plot.bitwise_equal(other[i].plot);
  CHECK(same == 0);
  cfg.seed = 5;
  const auto again = gen_dataset(cfg);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(ds[i].plot.bitwise_equal(again[i].plot));
  cfg.n_groups = 1;
  check_errc([&] { cfg.validate(); }, Errc::InvalidArgument);
}

TEST_CASE("groups differ in noise level") {
  GroupConfig cfg;
  cfg.n_groups = 4;
  cfg.plots_per_group = 50;
  cfg.seed = 21;
  const auto ds = gen_dataset(cfg);
  // Roughness (mean squared second difference) tracks the group's noise ceiling.
  std::vector<double> rough(cfg.n_groups, 0.0);
  for (const auto& lp : ds) {
    const auto d = lp.plot.data();
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < d.size(); ++i) {
      const double dd = d[i - 1] - 2.0 * d[i] + d[i + 1];
      acc += dd * dd;
    }
    rough[lp.group_id] += acc;
  }
  const auto [lo, hi] = std::minmax_element(rough.begin(), rough.end());
  CHECK(*hi > 1.1 * *lo);
}

TEST_CASE("dataset speeds are log-uniform (KS test)") {
  GroupConfig cfg;
  cfg.n_groups = 2;
  cfg.plots_per_group = 5000;
  cfg.seed = 2024;
  cfg.geometry.n_t = 32;
  cfg.geometry.dt = kDefaultDt * 2;
  const auto ds = gen_dataset(cfg);
  std::vector<double> u;
  for (const auto& lp : ds) {
    u.push_back((std::log(lp.truth) - std::log(0.5)) / (std::log(10.0) - std::log(0.5)));
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
  }
  const double p = ks_p_value(d, u.size());
  MESSAGE("KS D = " << d << ", p = " << p);
  CHECK(p > 0.01);
}

}  // TEST_SUITE
