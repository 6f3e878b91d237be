"""Colour-evoked EEG classification pipeline (Python bindings)."""

from ._core import (
    ChromaEegError,
    __version__,
    accuracy,
    cwt_power,
    feature_names,
    fft,
    fit_predict,
    load_features,
    mcc,
    multiclass_auc,
    run_cli,
)

__all__ = [
    "ChromaEegError",
    "__version__",
    "accuracy",
    "cwt_power",
    "feature_names",
    "fft",
    "fit_predict",
    "load_features",
    "mcc",
    "multiclass_auc",
    "run_cli",
]
