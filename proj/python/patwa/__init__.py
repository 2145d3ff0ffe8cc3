"""Patois ASR evaluation and scaling-law toolkit."""

from ._core import (
    PatwaError,
    ScalingFit,
    __version__,
    corpus_wer,
    fit_power_law,
    log_mel,
    manifest_total_hours,
    pad_or_trim,
    predict_wer,
    required_hours,
    required_params,
    resample,
    tokenize,
    wer,
)

__all__ = [
    "PatwaError",
    "ScalingFit",
    "__version__",
    "corpus_wer",
    "fit_power_law",
    "log_mel",
    "manifest_total_hours",
    "pad_or_trim",
    "predict_wer",
    "required_hours",
    "required_params",
    "resample",
    "tokenize",
    "wer",
]
