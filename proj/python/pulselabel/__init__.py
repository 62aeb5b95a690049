"""Python access to the pulselabel signal, quality and query-engine core."""

from ._core import (
    FEATURE_NAMES,
    EngineConfig,
    QueryEngine,
    assess_quality,
    bandpass_filter,
    coverage,
    label_gap_ms,
    process_window,
    simulate_window,
)

__all__ = [
    "FEATURE_NAMES",
    "EngineConfig",
    "QueryEngine",
    "assess_quality",
    "bandpass_filter",
    "coverage",
    "label_gap_ms",
    "process_window",
    "simulate_window",
]
