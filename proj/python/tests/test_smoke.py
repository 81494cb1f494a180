import math

import numpy as np
import pytest

import swei


def test_plot_roundtrip(tmp_path):
    data = np.random.default_rng(0).random((4, 16), dtype=np.float32)
    plot = swei.Plot(data, 2e-4, 1.8e-4)
    assert (plot.n_x, plot.n_t) == (4, 16)
    path = tmp_path / "p.swst"
    swei.write_plot(plot, path)
    back = swei.read_plot(path)
    assert back.bitwise_equal(plot)
    np.testing.assert_array_equal(back.data, data)


def test_errors_carry_codes():
    data = np.zeros((2, 8), dtype=np.float32)
    data[0, 0] = np.nan
    with pytest.raises(swei.SweiError) as info:
        swei.Plot(data, 1e-4, 1e-4)
    assert info.value.code == "NonFiniteData"


def test_classical_estimators_on_clean_wave():
    plot = swei.gen_plot(2.0, t0=1.5e-3)
    for method in ("ttp", "xcorr", "radon"):
        est = swei.estimate(plot, method)
        assert abs(est.sws / 2.0 - 1.0) < 0.03
    assert abs(swei.estimate(plot, "ransac", seed=1).sws / 2.0 - 1.0) < 0.03
    with pytest.raises(swei.SweiError):
        swei.estimate(plot, "ransac")


def test_uncertainty_helpers():
    est = swei.to_estimate(math.log(2.0), math.log(0.09))
    assert est.m == pytest.approx(2.0)
    assert est.sigma == pytest.approx(0.3)
    assert est.rel_unc == pytest.approx(math.sinh(0.3))
    assert swei.to_modulus(est, 1000.0) == pytest.approx((4000.0, 0.6))
    avg = swei.weighted_average([swei.LogNormalSpeed(2.0, 0.1), swei.LogNormalSpeed(3.0, 0.2)])
    assert avg.m == pytest.approx(math.exp(0.8 * math.log(2.0) + 0.2 * math.log(3.0)))
    fit = swei.mle_fit([1.0, math.e])
    assert (fit.m, fit.sigma) == pytest.approx((math.exp(0.5), 0.5))


def test_preprocessing():
    plot = swei.gen_plot(3.0, kind=swei.MotionKind.velocity)
    shifted = swei.hilbert_shift(plot)
    assert shifted.n_t == plot.n_t
    up = swei.resample_time(plot, 2.0)
    assert up.n_t == 127
    assert swei.apparent_speed_factor(up) == pytest.approx(2.0)
    norm, dead = swei.normalize_tracks(plot)
    assert norm.data.min() == 0.0 and norm.data.max() == 1.0
    assert not any(dead)


def test_model_forward_and_training(tmp_path):
    cfg = swei.NetConfig(channels=4)
    model = swei.init_model(cfg, 1)
    assert swei.init_model(swei.NetConfig(), 1).parameter_count == 58882
    path = tmp_path / "m.swnw"
    swei.write_model(model, path)
    assert swei.read_model(path).bitwise_equal(model)

    data = swei.gen_dataset(2, 8, seed=3)
    plots = [p for p, _, _ in data]
    truths = np.array([t for _, t, _ in data])
    trained, trace = swei.train(plots, truths, cfg, epochs=3, batch_size=4, seed=5)
    again, _ = swei.train(plots, truths, cfg, epochs=3, batch_size=4, seed=5)
    assert trained.bitwise_equal(again)
    assert len(trace) == 3
    mu, s = trained.forward(plots[0])
    assert math.isfinite(mu) and math.isfinite(s)

    pred = swei.Predictor([trained, model]).predict(plots[0])
    assert pred["m_mps"] > 0.0
    assert pred["abs_unc_mps"] == pytest.approx(pred["m_mps"] * pred["rel_unc"])


def test_calibration_binning():
    rng = np.random.default_rng(1)
    m = rng.uniform(0.5, 10.0, 5000)
    sigma = rng.uniform(0.02, 0.3, 5000)
    truth = m * np.exp(sigma * rng.standard_normal(5000))
    bins, dev = swei.bin_calibration(m, sigma, truth, 25)
    assert len(bins) == 25
    assert sum(b[2] for b in bins) == 5000
    assert dev < 15.0
    assert swei.ensemble_spread([1.0, 3.0]) == pytest.approx(1.0)


def test_cli_entry_point(tmp_path):
    code, _, err = swei.run_cli(["synth", "--groups", "1", "--per-group", "2", "--seed", "1",
                                 "--out", str(tmp_path / "d")])
    assert code == 2
    code, out, _ = swei.run_cli(["synth", "--groups", "2", "--per-group", "2", "--seed", "1",
                                 "--out", str(tmp_path / "d")])
    assert code == 0
    assert len(list((tmp_path / "d").glob("*.swst"))) == 4
