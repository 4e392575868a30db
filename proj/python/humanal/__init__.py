"""Calibrated labels from noisy human binary-matching decisions.

The heavy lifting lives in the compiled ``_core`` extension; corpora travel
as JSON-Lines files, configurations and reports as JSON strings.
"""

from ._core import (
    calibrate,
    default_config,
    evaluate,
    featurize,
    oracle_accuracy,
    simulate,
    smoothed_confidence,
    stats,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "calibrate",
    "default_config",
    "evaluate",
    "featurize",
    "oracle_accuracy",
    "simulate",
    "smoothed_confidence",
    "stats",
    "validate",
    "__version__",
]
