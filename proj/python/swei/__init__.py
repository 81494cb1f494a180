"""Shear wave speed estimation with calibrated log-normal uncertainty."""

from ._swei import (
    ClassicalEstimate,
    LogNormalSpeed,
    Model,
    MotionKind,
    NetConfig,
    Plot,
    Predictor,
    SweiError,
    apparent_speed_factor,
    bin_calibration,
    ensemble_spread,
    estimate,
    gen_dataset,
    gen_plot,
    hilbert_shift,
    init_model,
    mixed_label,
    mle_fit,
    normalize_tracks,
    read_model,
    read_plot,
    resample_time,
    run_cli,
    to_estimate,
    to_modulus,
    train,
    weighted_average,
    write_model,
    write_plot,
)

__all__ = [name for name in dir() if not name.startswith("_")]
